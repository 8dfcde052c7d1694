"""Synthetic vacancy corpora: random fixtures and planted-confusion sets.

Real annotated vacancy corpora are proprietary, so the harness ships
generators instead. ``synthetic_corpus`` builds schema-valid records whose
spans line up exactly with the embedded skill strings. ``planted_confusion``
additionally fabricates predictions with known per-vacancy (tp, fp, fn)
counts: true positives are verbatim copies of gold skills (similarity 1.0)
and false positives are strings verified to be dissimilar from every gold
skill under the mock embedder, so any threshold in (0.5, 1.0] recovers the
planted counts exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import SkillSpan, VacancyRecord
from .embedding import cosine_similarity, mock_embed

_SYLLABLES = [
    "ba", "re", "mo", "ki", "tu", "san", "vel", "dor", "li", "qua",
    "zen", "pol", "gra", "nis", "fo", "lam", "chu", "vy", "ter", "ost",
]

_TITLES = [
    "Data Engineer", "Accountant", "Sales Manager", "Backend Developer",
    "HR Specialist", "Logistics Coordinator", "QA Engineer", "Designer",
]

# predictions vs gold must stay clearly apart under the mock embedder
_DISSIMILARITY_CEILING = 0.5


def _word(rng: random.Random, syllables: int) -> str:
    return "".join(rng.choice(_SYLLABLES) for _ in range(syllables))


def _skill_phrase(rng: random.Random) -> str:
    return " ".join(_word(rng, rng.randint(2, 3)) for _ in range(rng.randint(1, 3)))


def _distinct_dissimilar_phrases(rng: random.Random, n: int) -> list[str]:
    """Phrases pairwise below the dissimilarity ceiling under the mock embedder."""
    phrases: list[str] = []
    vectors = []
    attempts = 0
    while len(phrases) < n:
        attempts += 1
        if attempts > 200 * (n + 1):
            raise RuntimeError("could not generate enough mutually dissimilar phrases")
        candidate = _skill_phrase(rng)
        if any(candidate.casefold() == p.casefold() for p in phrases):
            continue
        vec = mock_embed(candidate)
        if any(cosine_similarity(vec, v) >= _DISSIMILARITY_CEILING for v in vectors):
            continue
        phrases.append(candidate)
        vectors.append(vec)
    return phrases


def _record_from_skills(rec_id: str, title: str, skills: list[str]) -> VacancyRecord:
    parts: list[str] = [f"{title}. Responsibilities include daily work. "]
    spans: list[SkillSpan] = []
    offset = len(parts[0])
    for i, skill in enumerate(skills):
        lead = "Required: " if i == 0 else "Also: "
        parts.append(lead)
        offset += len(lead)
        parts.append(skill)
        spans.append(SkillSpan(start=offset, end=offset + len(skill), skill=skill))
        offset += len(skill)
        parts.append(". ")
        offset += 2
    return VacancyRecord(id=rec_id, title=title, desc="".join(parts), values=tuple(spans))


def synthetic_corpus(
    n_records: int, seed: int, max_skills: int = 6
) -> list[VacancyRecord]:
    """Random schema-valid corpus; spans match their desc slices exactly."""
    rng = random.Random(seed)
    records = []
    for i in range(n_records):
        skills = _distinct_dissimilar_phrases(rng, rng.randint(1, max_skills))
        records.append(
            _record_from_skills(f"vac-{i:05d}", rng.choice(_TITLES), skills)
        )
    return records


@dataclass(frozen=True)
class PlantedCorpus:
    records: list[VacancyRecord]
    predictions: dict[str, list[str]]  # vacancy id -> predicted skills
    planted: dict[str, tuple[int, int, int]]  # vacancy id -> (tp, fp, fn)


def planted_confusion(n_records: int, seed: int) -> PlantedCorpus:
    """Corpus plus predictions engineered to hit known per-vacancy counts.

    Empty-gold and empty-prediction vacancies are included so degenerate
    metric conventions (0/0 -> 0) get exercised.
    """
    rng = random.Random(seed)
    records: list[VacancyRecord] = []
    predictions: dict[str, list[str]] = {}
    planted: dict[str, tuple[int, int, int]] = {}
    for i in range(n_records):
        tp = rng.randint(0, 4)
        fn = rng.randint(0, 3)
        fp = rng.randint(0, 3)
        phrases = _distinct_dissimilar_phrases(rng, tp + fn + fp)
        gold = phrases[: tp + fn]
        fp_strings = phrases[tp + fn :]
        rec_id = f"plant-{i:05d}"
        records.append(_record_from_skills(rec_id, rng.choice(_TITLES), gold))
        preds = gold[:tp] + fp_strings
        rng.shuffle(preds)
        predictions[rec_id] = preds
        planted[rec_id] = (tp, fp, fn)
    return PlantedCorpus(records=records, predictions=predictions, planted=planted)
