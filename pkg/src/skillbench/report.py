"""Benchmark report emission: leaderboard, efficiency table, costs, scatter plots.

Output directory layout:

    leaderboard.csv / leaderboard.md      metric table, 2-decimal half-even
    leaderboard_full.csv                  same rows at full float precision
    efficiency.csv / efficiency.md        F1, model size, time per vacancy
    costs.csv                             per-model inference cost summary
    scatter_size.csv / scatter_size.svg   F1 vs parameter count (log x)
    scatter_time.csv / scatter_time.svg   F1 vs mean latency (log x)
    run_manifest.json                     config fingerprint, dataset hash, timestamps

Every emitted file embeds the config fingerprint (CSV comment line, markdown
footer, SVG caption), so any number can be traced back to the threshold,
matcher, aggregation, accuracy mode, embedder, and seed that produced it.
CSV bytes are deterministic for identical inputs and config; only
run_manifest.json carries timestamps. The ROC AUC column is the harness's
rank-statistic detection AUC (see metrics module), not a probabilistic
classifier AUC; the fingerprint records this.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Literal, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricsRow  # noqa: E402

logger = logging.getLogger(__name__)

LEADERBOARD_COLUMNS = ["Model", "Accuracy", "F1", "Precision", "Recall", "ROC AUC"]
EFFICIENCY_COLUMNS = ["Model", "F1", "Model size", "Time per vacancy (sec)"]


class ReportError(ValueError):
    """Nothing to report (no results, or no plottable rows)."""


@dataclass(frozen=True)
class ConfigFingerprint:
    """Everything that determines metric values for a run."""

    threshold: float
    matcher: str
    aggregation: str
    accuracy_mode: str
    embedder: str  # descriptor label, e.g. "mock-trigram@1"
    seed: int
    dataset_sha256: str

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "matcher": self.matcher,
            "aggregation": self.aggregation,
            "accuracy_mode": self.accuracy_mode,
            "embedder": self.embedder,
            "seed": self.seed,
            "dataset_sha256": self.dataset_sha256,
            "auc_variant": "detection-rank-statistic",
        }

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def comment(self) -> str:
        d = self.as_dict()
        fields = " ".join(f"{k}={d[k]}" for k in sorted(d))
        return f"# fingerprint={self.digest()} {fields}"


@dataclass(frozen=True)
class BenchmarkResult:
    """Everything the report needs about one evaluated model."""

    model: str
    metrics: MetricsRow
    mean_latency_sec: float | None
    model_size_params: int | None
    total_cost_usd: float
    cost_complete: bool
    evaluated: int
    failed: int


def sort_results(results: Sequence[BenchmarkResult]) -> list[BenchmarkResult]:
    """Leaderboard order: F1 descending, ties alphabetical by model name."""
    return sorted(results, key=lambda r: (-r.metrics.f1, r.model))


def round2(value: float) -> str:
    """Round half-even to two decimals, rendered with a trailing zero kept."""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def format_param_count(params: int) -> str:
    """180_000_000 -> "180M", 8_000_000_000 -> "8B", 1_500_000_000 -> "1.5B"."""
    for unit, suffix in ((10**9, "B"), (10**6, "M"), (10**3, "K")):
        if params >= unit:
            value = params / unit
            text = f"{value:.1f}".rstrip("0").rstrip(".")
            return f"{text}{suffix}"
    return str(params)


def _csv_text(fingerprint: ConfigFingerprint, header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    buf.write(fingerprint.comment() + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _md_table(header: list[str], rows: list[list[str]], fingerprint: ConfigFingerprint) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append(f"_{fingerprint.comment().lstrip('# ')}_")
    return "\n".join(lines) + "\n"


def leaderboard(
    results: Sequence[BenchmarkResult], fingerprint: ConfigFingerprint
) -> tuple[str, str]:
    """Metric table as (csv, markdown): fixed columns, 2 decimals, F1-sorted."""
    if not results:
        raise ReportError("no model results to report")
    rows = []
    for r in sort_results(results):
        m = r.metrics
        rows.append(
            [r.model, round2(m.accuracy), round2(m.f1), round2(m.precision),
             round2(m.recall), round2(m.auc)]
        )
    return (
        _csv_text(fingerprint, LEADERBOARD_COLUMNS, rows),
        _md_table(LEADERBOARD_COLUMNS, rows, fingerprint),
    )


def leaderboard_full(
    results: Sequence[BenchmarkResult], fingerprint: ConfigFingerprint
) -> str:
    """Full-precision companion to the rounded leaderboard."""
    if not results:
        raise ReportError("no model results to report")
    rows = []
    for r in sort_results(results):
        m = r.metrics
        rows.append(
            [r.model, repr(m.accuracy), repr(m.f1), repr(m.precision),
             repr(m.recall), repr(m.auc), m.aggregation, m.accuracy_mode,
             str(r.evaluated), str(r.failed)]
        )
    header = LEADERBOARD_COLUMNS + ["Aggregation", "Accuracy mode", "Evaluated", "Failed"]
    return _csv_text(fingerprint, header, rows)


def efficiency_table(
    results: Sequence[BenchmarkResult], fingerprint: ConfigFingerprint
) -> tuple[str, str]:
    """F1 / model size / latency table; latency printed with 3 decimals."""
    if not results:
        raise ReportError("no model results to report")
    rows = []
    for r in sort_results(results):
        size = format_param_count(r.model_size_params) if r.model_size_params else ""
        latency = f"{r.mean_latency_sec:.3f}" if r.mean_latency_sec is not None else ""
        rows.append([r.model, round2(r.metrics.f1), size, latency])
    return (
        _csv_text(fingerprint, EFFICIENCY_COLUMNS, rows),
        _md_table(EFFICIENCY_COLUMNS, rows, fingerprint),
    )


def costs_table(
    results: Sequence[BenchmarkResult], fingerprint: ConfigFingerprint
) -> str:
    if not results:
        raise ReportError("no model results to report")
    header = ["Model", "Total cost (USD)", "Cost complete", "Evaluated", "Failed"]
    rows = []
    for r in sort_results(results):
        rows.append(
            [r.model, f"{r.total_cost_usd:.2f}", str(r.cost_complete).lower(),
             str(r.evaluated), str(r.failed)]
        )
    return _csv_text(fingerprint, header, rows)


ScatterAxis = Literal["size", "time"]


@dataclass(frozen=True)
class ScatterPoint:
    model: str
    x: float
    f1: float


def scatter_data(
    results: Sequence[BenchmarkResult], axis: ScatterAxis
) -> list[ScatterPoint]:
    """One (x, F1) point per model; models missing the axis value are omitted."""
    if axis not in ("size", "time"):
        raise ValueError(f"unknown scatter axis {axis!r}")
    points = []
    for r in sort_results(results):
        if axis == "size":
            x = float(r.model_size_params) if r.model_size_params else None
        else:
            x = r.mean_latency_sec
        if x is None or x <= 0:
            logger.warning("scatter %s: omitting %s (no %s value)", axis, r.model, axis)
            continue
        points.append(ScatterPoint(model=r.model, x=x, f1=r.metrics.f1))
    if not points:
        raise ReportError(f"no plottable rows for scatter axis {axis!r}")
    return points


def scatter_csv(points: Sequence[ScatterPoint], axis: ScatterAxis,
                fingerprint: ConfigFingerprint) -> str:
    import math

    x_name = "size_params" if axis == "size" else "mean_latency_sec"
    header = ["model", x_name, f"log10_{x_name}", "f1"]
    rows = [
        [p.model, repr(p.x), repr(math.log10(p.x)), repr(p.f1)] for p in points
    ]
    return _csv_text(fingerprint, header, rows)


def render_scatter_svg(
    points: Sequence[ScatterPoint],
    axis: ScatterAxis,
    path: Path,
    fingerprint: ConfigFingerprint,
) -> None:
    """Labeled log-x scatter of F1 against model size or latency."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    xs = [p.x for p in points]
    ys = [p.f1 for p in points]
    ax.scatter(xs, ys, s=36, color="#1f77b4", zorder=3)
    for p in points:
        ax.annotate(p.model, (p.x, p.f1), textcoords="offset points",
                    xytext=(4, 4), fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("Model size (parameters)" if axis == "size" else "Time per vacancy (sec)")
    ax.set_ylabel("F1")
    ax.set_title("F1 vs model size" if axis == "size" else "F1 vs inference time")
    ax.grid(True, which="both", alpha=0.3)
    fig.text(0.01, 0.01, f"cfg {fingerprint.digest()}", fontsize=5, color="#888888")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_report(
    results: Sequence[BenchmarkResult],
    out_dir: str | Path,
    fingerprint: ConfigFingerprint,
    extra_manifest: dict | None = None,
) -> dict[str, Path]:
    """Emit every report artifact into ``out_dir``; returns the written paths."""
    if not results:
        raise ReportError("no model results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    lb_csv, lb_md = leaderboard(results, fingerprint)
    eff_csv, eff_md = efficiency_table(results, fingerprint)
    files = {
        "leaderboard.csv": lb_csv,
        "leaderboard.md": lb_md,
        "leaderboard_full.csv": leaderboard_full(results, fingerprint),
        "efficiency.csv": eff_csv,
        "efficiency.md": eff_md,
        "costs.csv": costs_table(results, fingerprint),
    }
    for axis in ("size", "time"):
        try:
            points = scatter_data(results, axis)  # type: ignore[arg-type]
        except ReportError as exc:
            logger.warning("%s", exc)
            continue
        files[f"scatter_{axis}.csv"] = scatter_csv(points, axis, fingerprint)  # type: ignore[arg-type]
        svg_path = out / f"scatter_{axis}.svg"
        render_scatter_svg(points, axis, svg_path, fingerprint)  # type: ignore[arg-type]
        written[f"scatter_{axis}.svg"] = svg_path

    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        written[name] = path

    manifest = {
        "fingerprint": fingerprint.as_dict(),
        "fingerprint_digest": fingerprint.digest(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "models": [
            {
                "model": r.model,
                "f1": r.metrics.f1,
                "evaluated": r.evaluated,
                "failed": r.failed,
                "mean_latency_sec": r.mean_latency_sec,
                "model_size_params": r.model_size_params,
                "total_cost_usd": r.total_cost_usd,
                "cost_complete": r.cost_complete,
            }
            for r in sort_results(results)
        ],
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    manifest_path = out / "run_manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    written["run_manifest.json"] = manifest_path
    return written
