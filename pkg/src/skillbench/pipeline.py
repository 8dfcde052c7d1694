"""End-to-end evaluation pipeline: extract -> parse -> embed -> match -> report.

``score_predictions`` is the single scoring path: both live adapter runs and
offline prediction files go through it, so the two CLI commands cannot drift
apart. Extraction responses are persisted per adapter as JSONL keyed by the
dataset hash, which makes runs resumable and lets threshold sweeps re-score
without re-querying expensive models.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Mapping, Sequence

import numpy as np

from .corpus import VacancyRecord, dataset_sha256, gold_skills
from .embedding import (
    EmbeddingCache,
    EmbeddingProvider,
    HttpEmbedder,
    MockEmbedder,
    cosine_similarity,
    embed_batch,
)
from .extractors import (
    AdapterFailure,
    AdapterManifest,
    AdapterRunResult,
    ExtractionResponse,
    UsageRecord,
    compute_cost,
    normalize_skills,
    run_adapter,
)
from .matching import (
    MatchOutcome,
    confusion_counts,
    match_exact,
    match_greedy,
    matrix_to_csv,
    similarity_matrix,
)
from .metrics import AggregateMetrics, ConfusionCounts, MetricsRow, aggregate, detection_auc
from .report import BenchmarkResult, ConfigFingerprint

logger = logging.getLogger(__name__)

MatcherMode = Literal["exact", "greedy"]


@dataclass
class RunConfig:
    """Knobs for one benchmark run; mirrors the CLI flags and config file keys."""

    dataset: Path
    out_dir: Path = Path("bench-out")
    threshold: float = 0.85
    matcher: MatcherMode = "exact"
    aggregation: Literal["micro", "macro"] = "macro"
    accuracy_mode: Literal["jaccard", "recall-compat"] = "jaccard"
    embedder: str = "mock"  # "mock" or an http(s) endpoint
    embedder_name: str | None = None
    embedder_version: str = "unversioned"
    cache_dir: Path | None = None
    parallelism: int = 1
    seed: int = 0
    lenient: bool = False
    dump_matrices: bool = False
    adapters: list[AdapterManifest] = field(default_factory=list)

    def validate(self) -> None:
        if not (0.0 < self.threshold <= 1.0):
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.matcher not in ("exact", "greedy"):
            raise ValueError(f"unknown matcher {self.matcher!r}")
        if self.aggregation not in ("micro", "macro"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.accuracy_mode not in ("jaccard", "recall-compat"):
            raise ValueError(f"unknown accuracy mode {self.accuracy_mode!r}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


def provider_from_config(config: RunConfig) -> EmbeddingProvider:
    if config.embedder == "mock":
        return MockEmbedder()
    return HttpEmbedder(
        config.embedder, name=config.embedder_name, version=config.embedder_version
    )


def open_cache(config: RunConfig) -> EmbeddingCache | None:
    return EmbeddingCache(config.cache_dir) if config.cache_dir else None


def fingerprint_for(config: RunConfig, provider: EmbeddingProvider) -> ConfigFingerprint:
    return ConfigFingerprint(
        threshold=config.threshold,
        matcher=config.matcher,
        aggregation=config.aggregation,
        accuracy_mode=config.accuracy_mode,
        embedder=provider.descriptor.label(),
        seed=config.seed,
        dataset_sha256=dataset_sha256(config.dataset),
    )


@dataclass(frozen=True)
class ScoredCorpus:
    """Scoring output for one model over the records it produced answers for."""

    per_vacancy: tuple[ConfusionCounts, ...]
    outcomes: tuple[MatchOutcome, ...]
    micro: AggregateMetrics
    macro: AggregateMetrics
    auc: float

    def selected(self, aggregation: str) -> AggregateMetrics:
        return self.micro if aggregation == "micro" else self.macro


def _auc_scores(
    records: Sequence[VacancyRecord],
    gold_lists: Sequence[tuple[str, ...]],
    pred_lists: Sequence[list[str]],
    matrices: Sequence[np.ndarray],
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None,
    seed: int,
) -> list[tuple[float, bool]]:
    """Scored (similarity, is-true-gold) pairs for the detection AUC.

    Positives: each gold skill scored by its best similarity to the vacancy's
    predictions (column max; 0.0 when there are no predictions). Negatives:
    the same number of distractor gold skills sampled from other vacancies
    (case-fold distinct from this vacancy's gold), scored against the same
    predictions.
    """
    pool: list[str] = []
    pool_keys: list[str] = []
    seen: set[str] = set()
    for gold in gold_lists:
        for s in gold:
            key = s.casefold()
            if key not in seen:
                seen.add(key)
                pool.append(s)
                pool_keys.append(key)

    rng = random.Random(seed)
    scored: list[tuple[float, bool]] = []
    for record, gold, preds, matrix in zip(records, gold_lists, pred_lists, matrices):
        if not gold:
            continue
        if preds:
            col_max = matrix.max(axis=0)
            for j in range(len(gold)):
                scored.append((float(col_max[j]), True))
        else:
            scored.extend((0.0, True) for _ in gold)

        own = {s.casefold() for s in gold}
        eligible = [i for i, key in enumerate(pool_keys) if key not in own]
        k = min(len(gold), len(eligible))
        if k == 0:
            continue
        picks = rng.sample(eligible, k)
        if preds:
            distractors = [pool[i] for i in picks]
            pred_vecs = embed_batch(provider, preds, cache)
            dis_vecs = embed_batch(provider, distractors, cache)
            for dv in dis_vecs:
                best = max(cosine_similarity(pv, dv) for pv in pred_vecs)
                scored.append((best, False))
        else:
            scored.extend((0.0, False) for _ in range(k))
    return scored


def score_predictions(
    records: Sequence[VacancyRecord],
    predictions: Mapping[str, Sequence[str]],
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None,
    config: RunConfig,
    dump_dir: Path | None = None,
) -> ScoredCorpus:
    """Score one model's predictions over the given records.

    Every record must have an entry in ``predictions`` (callers decide how to
    handle gaps: the score command fills missing ids with empty lists, the
    evaluate command excludes failed records entirely). ``dump_dir`` writes
    one similarity-matrix CSV per vacancy for debugging.
    """
    matcher = match_exact if config.matcher == "exact" else match_greedy
    gold_lists: list[tuple[str, ...]] = []
    pred_lists: list[list[str]] = []
    matrices: list[np.ndarray] = []
    outcomes: list[MatchOutcome] = []
    counts: list[ConfusionCounts] = []
    if dump_dir is not None:
        dump_dir.mkdir(parents=True, exist_ok=True)
    for record in records:
        gold = gold_skills(record).skills
        preds = normalize_skills(predictions[record.id])
        matrix = similarity_matrix(preds, list(gold), provider, cache)
        outcome = matcher(matrix, config.threshold)
        if dump_dir is not None:
            safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in record.id)
            (dump_dir / f"{safe}.csv").write_text(
                matrix_to_csv(matrix, preds, list(gold)), encoding="utf-8"
            )
        gold_lists.append(gold)
        pred_lists.append(preds)
        matrices.append(matrix)
        outcomes.append(outcome)
        counts.append(confusion_counts(outcome))

    micro = aggregate(counts, "micro", config.accuracy_mode)
    macro = aggregate(counts, "macro", config.accuracy_mode)
    scored = _auc_scores(
        records, gold_lists, pred_lists, matrices, provider, cache, config.seed
    )
    try:
        auc = detection_auc(scored)
    except ValueError as exc:
        logger.warning("detection AUC degenerate (%s); reporting 0.5", exc)
        auc = 0.5
    return ScoredCorpus(
        per_vacancy=tuple(counts),
        outcomes=tuple(outcomes),
        micro=micro,
        macro=macro,
        auc=auc,
    )


def metrics_row(model: str, scored: ScoredCorpus, config: RunConfig) -> MetricsRow:
    agg = scored.selected(config.aggregation)
    return MetricsRow(
        model=model,
        accuracy=agg.accuracy,
        f1=agg.f1,
        precision=agg.precision,
        recall=agg.recall,
        auc=scored.auc,
        aggregation=agg.aggregation,
        accuracy_mode=agg.accuracy_mode,
    )


# --- response persistence ----------------------------------------------------

def _responses_path(out_dir: Path, adapter_name: str) -> Path:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in adapter_name)
    return out_dir / "responses" / f"{safe}.jsonl"


def _load_saved_responses(
    path: Path, dataset_hash: str
) -> dict[str, tuple[ExtractionResponse, UsageRecord]]:
    """Previously persisted responses, or {} when absent or from another dataset."""
    if not path.exists():
        return {}
    saved: dict[str, tuple[ExtractionResponse, UsageRecord]] = {}
    with open(path, "r", encoding="utf-8") as f:
        header_line = f.readline().strip()
        try:
            header = json.loads(header_line) if header_line else {}
        except json.JSONDecodeError:
            logger.warning("ignoring unreadable response file %s", path)
            return {}
        if header.get("dataset_sha256") != dataset_hash:
            logger.info("response file %s belongs to another dataset; ignoring", path)
            return {}
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            response = ExtractionResponse(
                id=str(obj["id"]),
                skills=tuple(obj["skills"]),
                raw_output=obj.get("raw_output"),
                latency_sec=obj.get("latency_sec"),
                tokens_in=obj.get("tokens_in"),
                tokens_out=obj.get("tokens_out"),
            )
            usage = UsageRecord(
                vacancy_id=response.id,
                wall_latency_sec=float(obj["wall_latency_sec"]),
                tokens_in=response.tokens_in,
                tokens_out=response.tokens_out,
                cost_usd=float(obj["cost_usd"]),
                cost_available=bool(obj["cost_available"]),
            )
            saved[response.id] = (response, usage)
    return saved


def _append_responses(
    path: Path,
    dataset_hash: str,
    adapter_name: str,
    items: Sequence[tuple[ExtractionResponse, UsageRecord]],
    new_file: bool,
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "w" if new_file else "a"
    with open(path, mode, encoding="utf-8") as f:
        if new_file:
            f.write(
                json.dumps({"adapter": adapter_name, "dataset_sha256": dataset_hash})
                + "\n"
            )
        for response, usage in items:
            f.write(
                json.dumps(
                    {
                        "id": response.id,
                        "skills": list(response.skills),
                        "raw_output": response.raw_output,
                        "latency_sec": response.latency_sec,
                        "tokens_in": response.tokens_in,
                        "tokens_out": response.tokens_out,
                        "wall_latency_sec": usage.wall_latency_sec,
                        "cost_usd": usage.cost_usd,
                        "cost_available": usage.cost_available,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


@dataclass
class AdapterEvaluation:
    result: BenchmarkResult
    scored: ScoredCorpus
    failures: list[AdapterFailure]
    evaluated_records: list[VacancyRecord]


def evaluate_adapter(
    manifest: AdapterManifest,
    records: Sequence[VacancyRecord],
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None,
    config: RunConfig,
    dataset_hash: str,
) -> AdapterEvaluation:
    """Extract (resuming from persisted responses), then score and summarize."""
    path = _responses_path(config.out_dir, manifest.name)
    saved = _load_saved_responses(path, dataset_hash)
    missing = [r for r in records if r.id not in saved]

    failures: list[AdapterFailure] = []
    if missing:
        run: AdapterRunResult = run_adapter(manifest, missing, config.parallelism)
        failures = run.failures
        _append_responses(
            path, dataset_hash, manifest.name, run.results, new_file=not saved
        )
        for response, usage in run.results:
            saved[response.id] = (response, usage)
    else:
        logger.info("adapter %s: all %d responses reused", manifest.name, len(records))

    evaluated_records = [r for r in records if r.id in saved]
    predictions = {rid: list(resp.skills) for rid, (resp, _) in saved.items()}
    usages = [saved[r.id][1] for r in evaluated_records]

    dump_dir = (
        config.out_dir / "matrices" / manifest.name if config.dump_matrices else None
    )
    scored = score_predictions(
        evaluated_records, predictions, provider, cache, config, dump_dir
    )
    cost = compute_cost(usages)
    mean_latency = (
        sum(u.wall_latency_sec for u in usages) / len(usages) if usages else None
    )
    result = BenchmarkResult(
        model=manifest.name,
        metrics=metrics_row(manifest.name, scored, config),
        mean_latency_sec=mean_latency,
        model_size_params=manifest.model_size_params,
        total_cost_usd=cost.total_usd,
        cost_complete=cost.complete and manifest.has_prices,
        evaluated=len(evaluated_records),
        failed=len(failures),
    )
    return AdapterEvaluation(
        result=result,
        scored=scored,
        failures=failures,
        evaluated_records=evaluated_records,
    )
