from __future__ import annotations

import json
import logging
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skillbench.corpus import (
    CorpusError,
    SkillSpan,
    VacancyRecord,
    dataset_stats,
    dump_dataset,
    gold_skills,
    load_dataset,
    span_consistency_report,
)

from .conftest import record_with_skills


def write_raw(tmp_path: Path, payload) -> Path:
    path = tmp_path / "ds.json"
    path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    return path


def test_load_accepts_span_within_bounds(tmp_path):
    desc = "x" * 100
    path = write_raw(
        tmp_path,
        [{"id": "a", "title": "t", "desc": desc,
          "values": [{"start": 10, "end": 25, "skill": "X"}]}],
    )
    records = load_dataset(path)
    assert len(records) == 1
    assert records[0].values == (SkillSpan(10, 25, "X"),)


def test_load_rejects_empty_span(tmp_path):
    path = write_raw(
        tmp_path,
        [{"id": "a", "title": "t", "desc": "x" * 100,
          "values": [{"start": 30, "end": 30, "skill": "X"}]}],
    )
    with pytest.raises(CorpusError, match=r"\[30,30\)"):
        load_dataset(path, strictness="strict")


def test_lenient_drops_out_of_bounds_span_keeps_record(tmp_path, caplog):
    payload = [
        {"id": "a", "title": "t", "desc": "short desc",
         "values": [{"start": 0, "end": 5, "skill": "short"}]},
        {"id": "b", "title": "t", "desc": "ok",
         "values": [{"start": 0, "end": 99, "skill": "broken"}]},
        {"id": "c", "title": "t", "desc": "fine", "values": []},
    ]
    path = write_raw(tmp_path, payload)
    with pytest.raises(CorpusError):
        load_dataset(path, strictness="strict")
    with caplog.at_level(logging.WARNING, logger="skillbench.corpus"):
        records = load_dataset(path, strictness="lenient")
    assert len(records) == 3
    assert sum(len(r.values) for r in records) == 1  # one span dropped
    assert sum("dropping" in m for m in caplog.messages) == 1


def test_duplicate_id_always_fatal(tmp_path):
    payload = [
        {"id": 7, "title": "t", "desc": "d", "values": []},
        {"id": "7", "title": "t", "desc": "d", "values": []},  # int/str ids collide
    ]
    path = write_raw(tmp_path, payload)
    for mode in ("strict", "lenient"):
        with pytest.raises(CorpusError, match="duplicate record id: 7"):
            load_dataset(path, strictness=mode)


def test_malformed_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[{", encoding="utf-8")
    with pytest.raises(CorpusError, match="malformed JSON"):
        load_dataset(bad)
    with pytest.raises(CorpusError, match="cannot read"):
        load_dataset(tmp_path / "missing.json")


def test_non_array_top_level_fatal(tmp_path):
    path = write_raw(tmp_path, {"records": []})
    with pytest.raises(CorpusError, match="JSON array"):
        load_dataset(path)


def test_round_trip_identity(tmp_path):
    records = [
        record_with_skills("r1", ["python", "sql"]),
        record_with_skills("r2", ["учёт", "отчётность"]),
    ]
    path = tmp_path / "rt.json"
    dump_dataset(records, path)
    reloaded = load_dataset(path, strictness="strict")
    assert reloaded == records
    # a second hop is also stable
    path2 = tmp_path / "rt2.json"
    dump_dataset(reloaded, path2)
    assert load_dataset(path2) == records


# --- gold_skills ------------------------------------------------------------

def _mk(values: list[str]) -> VacancyRecord:
    return record_with_skills("g", values)


def test_gold_skills_exact_duplicate_collapsed():
    rec = _mk(["Python", "Python"])
    assert gold_skills(rec, dedupe="exact").skills == ("Python",)


def test_gold_skills_empty_values():
    rec = VacancyRecord(id="e", title="t", desc="d", values=())
    assert gold_skills(rec).skills == ()


def _dedupe_oracle(skills: list[str], casefold: bool) -> list[str]:
    # independent reimplementation: dict preserves first occurrence
    seen: dict[str, str] = {}
    for s in skills:
        s = s.strip()
        key = s.casefold() if casefold else s
        if key not in seen:
            seen[key] = s
    return list(seen.values())


def test_gold_skills_case_fold_keeps_first_surface_form():
    rec = VacancyRecord(
        id="g", title="t", desc="SQL  sql padding",
        values=(SkillSpan(0, 4, "SQL "), SkillSpan(5, 8, "sql")),
    )
    got = gold_skills(rec, dedupe="case-fold").skills
    assert got == ("SQL",)
    assert list(got) == _dedupe_oracle(["SQL ", "sql"], casefold=True)


@given(
    skills=st.lists(
        st.text(
            alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd"), max_codepoint=0x4FF),
            min_size=1, max_size=8,
        ),
        min_size=0, max_size=8,
    ),
    casefold=st.booleans(),
)
@settings(max_examples=200)
def test_gold_skills_matches_dedupe_oracle(skills, casefold):
    skills = [s for s in skills if s.strip()]
    rec = record_with_skills("p", skills)
    got = gold_skills(rec, dedupe="case-fold" if casefold else "exact")
    assert list(got.skills) == _dedupe_oracle(skills, casefold)
    assert len(got.skills) <= len(rec.values)
    trimmed_values = [s.skill.strip() for s in rec.values]
    assert all(s in trimmed_values for s in got.skills)


# --- span consistency --------------------------------------------------------

def test_span_consistency_exact_substring_clean():
    rec = VacancyRecord(
        id="s", title="t", desc="knows SQL well",
        values=(SkillSpan(6, 9, "SQL"),),
    )
    assert span_consistency_report(rec) == []


def test_span_consistency_flags_mismatch():
    rec = VacancyRecord(
        id="s", title="t", desc="knows SQL well",
        values=(SkillSpan(6, 9, "SQL databases"),),
    )
    notes = span_consistency_report(rec)
    assert len(notes) == 1
    assert "SQL databases" in notes[0]


def test_span_consistency_planted_fixture_counts():
    records = [record_with_skills(f"r{i}", ["alpha beta", "gamma"]) for i in range(10)]
    # plant 2 mismatches by rewording the annotation, not the desc
    def reword(rec: VacancyRecord) -> VacancyRecord:
        first = rec.values[0]
        return VacancyRecord(
            id=rec.id, title=rec.title, desc=rec.desc,
            values=(SkillSpan(first.start, first.end, first.skill + " extended"),)
            + rec.values[1:],
        )

    records[3] = reword(records[3])
    records[7] = reword(records[7])
    total = sum(len(span_consistency_report(r)) for r in records)
    assert total == 2


# --- stats -------------------------------------------------------------------

def test_stats_empty():
    s = dataset_stats([])
    assert (s.record_count, s.span_count, s.mean_skills_per_record) == (0, 0, 0.0)


def test_stats_arithmetic():
    records = [
        record_with_skills("a", ["x", "y", "z"]),
        record_with_skills("b", ["w"]),
    ]
    s = dataset_stats(records)
    assert (s.record_count, s.span_count, s.mean_skills_per_record) == (2, 4, 2.0)


# --- lenient mode never yields invalid spans ---------------------------------

@given(
    start=st.integers(-5, 30), end=st.integers(-5, 30),
    skill=st.text(max_size=6), desc_len=st.integers(0, 20),
)
@settings(max_examples=200)
def test_lenient_output_satisfies_span_invariants(tmp_path_factory, start, end, skill, desc_len):
    desc = "d" * desc_len
    payload = [{"id": "x", "title": "t", "desc": desc,
                "values": [{"start": start, "end": end, "skill": skill}]}]
    path = tmp_path_factory.mktemp("lenient") / "ds.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    records = load_dataset(path, strictness="lenient")
    for rec in records:
        for span in rec.values:
            assert span.problems(rec.desc) == []
