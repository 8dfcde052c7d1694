from __future__ import annotations

import sys
from pathlib import Path

import pytest

from skillbench.corpus import SkillSpan, VacancyRecord, dump_dataset
from skillbench.embedding import MockEmbedder

SCRIPTS_DIR = Path(__file__).parent / "adapter_scripts"


def adapter_command(script: str, *args: str) -> tuple[str, ...]:
    """argv for one of the protocol test adapters."""
    return (sys.executable, str(SCRIPTS_DIR / script), *args)


def record_with_skills(rec_id: str, skills: list[str], title: str = "Engineer") -> VacancyRecord:
    """Record whose desc embeds each skill at a correct span."""
    parts = [f"{title} wanted. "]
    spans = []
    offset = len(parts[0])
    for skill in skills:
        parts.append("Needs: ")
        offset += len("Needs: ")
        parts.append(skill)
        spans.append(SkillSpan(start=offset, end=offset + len(skill), skill=skill))
        offset += len(skill)
        parts.append(". ")
        offset += 2
    return VacancyRecord(id=rec_id, title=title, desc="".join(parts), values=tuple(spans))


@pytest.fixture
def mock_provider() -> MockEmbedder:
    return MockEmbedder()


@pytest.fixture
def small_dataset(tmp_path: Path) -> Path:
    """Three clean records on disk."""
    records = [
        record_with_skills("r1", ["python", "sql"]),
        record_with_skills("r2", ["accounting"]),
        record_with_skills("r3", ["negotiation", "crm systems", "excel"]),
    ]
    path = tmp_path / "dataset.json"
    dump_dataset(records, path)
    return path


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of each run."""
    rows = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(report, "when", "call") == "call":
                rows.append((nodeid.split("::")[-1], outcome.upper()))
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, outcome in rows:
            terminalreporter.write_line(f"{outcome:7s} {name}")
