"""Span-annotated vacancy corpora: loading, validation, and gold-label queries.

Dataset files are UTF-8 JSON arrays; each element is one vacancy:

    {"id": <string or int>, "title": <string>, "desc": <string>,
     "values": [{"start": <int>, "end": <int>, "skill": <string>}, ...]}

``start``/``end`` are half-open character offsets into ``desc`` counting
Unicode code points, not bytes. Record ids are normalized to strings on load
so JSON int ids and string ids compare equal everywhere downstream.

Spans are treated as advisory: scoring operates on the ``skill`` strings,
and :func:`span_consistency_report` surfaces disagreements between a span's
text slice and its annotated skill without failing anything.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

logger = logging.getLogger(__name__)

Strictness = Literal["strict", "lenient"]
DedupeMode = Literal["exact", "case-fold"]


class CorpusError(ValueError):
    """Fatal dataset problem: unreadable file, malformed JSON, schema violation."""


@dataclass(frozen=True)
class SkillSpan:
    """One annotated skill mention located at [start, end) in the description."""

    start: int
    end: int
    skill: str

    def problems(self, desc: str) -> list[str]:
        """Invariant violations of this span against its owning description."""
        issues: list[str] = []
        if not (0 <= self.start < self.end <= len(desc)):
            issues.append(
                f"span [{self.start},{self.end}) out of bounds for desc of length {len(desc)}"
            )
        if not self.skill.strip():
            issues.append("skill text is empty after trimming")
        return issues


@dataclass(frozen=True)
class VacancyRecord:
    """One job posting with its gold skill spans."""

    id: str
    title: str
    desc: str
    values: tuple[SkillSpan, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "desc": self.desc,
            "values": [
                {"start": s.start, "end": s.end, "skill": s.skill} for s in self.values
            ],
        }


@dataclass(frozen=True)
class GoldSkillSet:
    """Deduplicated gold skill strings for one vacancy, in first-occurrence order."""

    vacancy_id: str
    skills: tuple[str, ...]


@dataclass(frozen=True)
class DatasetStats:
    record_count: int
    span_count: int
    mean_skills_per_record: float


def _parse_span(raw: object, where: str) -> SkillSpan:
    if not isinstance(raw, dict):
        raise CorpusError(f"{where}: span is not an object: {raw!r}")
    start = raw.get("start")
    end = raw.get("end")
    skill = raw.get("skill")
    if not isinstance(start, int) or isinstance(start, bool):
        raise CorpusError(f"{where}: span 'start' must be an integer, got {start!r}")
    if not isinstance(end, int) or isinstance(end, bool):
        raise CorpusError(f"{where}: span 'end' must be an integer, got {end!r}")
    if not isinstance(skill, str):
        raise CorpusError(f"{where}: span 'skill' must be a string, got {skill!r}")
    return SkillSpan(start=start, end=end, skill=skill)


def _parse_record(raw: object, index: int, strictness: Strictness) -> VacancyRecord:
    where = f"record #{index}"
    if not isinstance(raw, dict):
        raise CorpusError(f"{where}: not an object")
    rec_id = raw.get("id")
    if not isinstance(rec_id, (str, int)) or isinstance(rec_id, bool):
        raise CorpusError(f"{where}: 'id' must be a string or integer, got {rec_id!r}")
    rec_id = str(rec_id)
    where = f"record id={rec_id}"
    title = raw.get("title")
    desc = raw.get("desc")
    if not isinstance(title, str):
        raise CorpusError(f"{where}: 'title' must be a string")
    if not isinstance(desc, str):
        raise CorpusError(f"{where}: 'desc' must be a string")
    raw_values = raw.get("values")
    if raw_values is None:
        raw_values = []
    if not isinstance(raw_values, list):
        raise CorpusError(f"{where}: 'values' must be a list")

    spans: list[SkillSpan] = []
    for i, raw_span in enumerate(raw_values):
        try:
            span = _parse_span(raw_span, f"{where} span #{i}")
            issues = span.problems(desc)
        except CorpusError as exc:
            if strictness == "strict":
                raise
            logger.warning("dropping malformed span: %s", exc)
            continue
        if issues:
            if strictness == "strict":
                raise CorpusError(f"{where} span #{i}: " + "; ".join(issues))
            logger.warning("dropping span #%d of %s: %s", i, where, "; ".join(issues))
            continue
        spans.append(span)
    return VacancyRecord(id=rec_id, title=title, desc=desc, values=tuple(spans))


def load_dataset(path: str | Path, strictness: Strictness = "strict") -> list[VacancyRecord]:
    """Load a vacancy dataset file.

    In strict mode any span invariant violation aborts with
    :class:`CorpusError`. In lenient mode violating spans are dropped with a
    logged warning and the record is kept. Duplicate ids and structural
    problems (wrong field types, non-array top level) are fatal in both modes.
    """
    if strictness not in ("strict", "lenient"):
        raise ValueError(f"unknown strictness {strictness!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read dataset {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, list):
        raise CorpusError(f"{path}: top-level value must be a JSON array of records")

    records: list[VacancyRecord] = []
    seen_ids: set[str] = set()
    for index, raw in enumerate(data):
        record = _parse_record(raw, index, strictness)
        if record.id in seen_ids:
            raise CorpusError(f"duplicate record id: {record.id}")
        seen_ids.add(record.id)
        records.append(record)
    return records


def dump_dataset(records: Sequence[VacancyRecord], path: str | Path) -> None:
    """Serialize records back to the dataset file format (round-trips with load)."""
    payload = [r.to_dict() for r in records]
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8"
    )


def dataset_sha256(path: str | Path) -> str:
    """Hash of the raw dataset file bytes; used to key cached extraction runs."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def gold_skills(record: VacancyRecord, dedupe: DedupeMode = "case-fold") -> GoldSkillSet:
    """Gold skill strings of a record: trimmed, deduplicated, original order.

    The first occurrence's surface form is kept; ``case-fold`` mode collapses
    strings that differ only in case (Unicode casefold).
    """
    if dedupe not in ("exact", "case-fold"):
        raise ValueError(f"unknown dedupe mode {dedupe!r}")
    out: list[str] = []
    seen: set[str] = set()
    for span in record.values:
        skill = span.skill.strip()
        key = skill.casefold() if dedupe == "case-fold" else skill
        if key in seen:
            continue
        seen.add(key)
        out.append(skill)
    return GoldSkillSet(vacancy_id=record.id, skills=tuple(out))


def span_consistency_report(record: VacancyRecord) -> list[str]:
    """Notes for spans whose desc slice disagrees with the annotated skill text.

    Diagnostic only: annotations where ``desc[start:end]`` differs from
    ``skill`` (after trimming both) are reported, never rejected.
    """
    notes: list[str] = []
    for i, span in enumerate(record.values):
        sliced = record.desc[span.start : span.end].strip()
        annotated = span.skill.strip()
        if sliced != annotated:
            notes.append(
                f"record {record.id} span #{i} [{span.start},{span.end}): "
                f"desc slice {sliced!r} != annotated skill {annotated!r}"
            )
    return notes


def dataset_stats(records: Sequence[VacancyRecord]) -> DatasetStats:
    """Record count, span count, and mean skills per record (0.0 when empty)."""
    n = len(records)
    spans = sum(len(r.values) for r in records)
    return DatasetStats(
        record_count=n,
        span_count=spans,
        mean_skills_per_record=(spans / n) if n else 0.0,
    )
