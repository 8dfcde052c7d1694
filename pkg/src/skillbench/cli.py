"""Command-line interface: validate corpora, run benchmarks, score predictions.

Exit codes: 0 success, 1 fatal config or data error, 2 partial run (at least
one adapter failed to start or left failed records behind).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corpus import (
    CorpusError,
    dataset_sha256,
    dataset_stats,
    load_dataset,
    span_consistency_report,
)
from .embedding import CacheError, EmbeddingError
from .extractors import AdapterError, AdapterManifest, load_manifests
from .fixtures import synthetic_corpus
from .pipeline import (
    RunConfig,
    evaluate_adapter,
    fingerprint_for,
    metrics_row,
    open_cache,
    provider_from_config,
    score_predictions,
)
from .report import BenchmarkResult, round2, write_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def _load_config_file(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # type: ignore[import-not-found]
        except ModuleNotFoundError:
            import tomli as tomllib  # type: ignore[no-redef]
        return tomllib.loads(text)
    return json.loads(text)


def _build_run_config(args: argparse.Namespace) -> RunConfig:
    file_values: dict = {}
    if args.config:
        file_values = _load_config_file(Path(args.config))

    def pick(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return file_values[key]
        return default

    dataset = pick(args.dataset, "dataset", None)
    if dataset is None:
        raise SystemExit("a dataset is required (--dataset or config file)")

    adapters: list[AdapterManifest] = []
    adapters_path = pick(getattr(args, "adapters", None), "adapters", None)
    if adapters_path:
        adapters = load_manifests(adapters_path)
    elif isinstance(file_values.get("adapter"), list):
        adapters = [AdapterManifest.from_dict(a) for a in file_values["adapter"]]

    cache_dir = pick(args.cache, "cache", None)
    config = RunConfig(
        dataset=Path(dataset),
        out_dir=Path(pick(args.out, "out", "bench-out")),
        threshold=float(pick(args.threshold, "threshold", 0.85)),
        matcher=pick(args.matcher, "matcher", "exact"),
        aggregation=pick(args.aggregation, "aggregation", "macro"),
        accuracy_mode=pick(args.accuracy_mode, "accuracy_mode", "jaccard"),
        embedder=pick(args.embedder, "embedder", "mock"),
        embedder_name=pick(getattr(args, "embedder_name", None), "embedder_name", None),
        embedder_version=pick(
            getattr(args, "embedder_version", None), "embedder_version", "unversioned"
        ),
        cache_dir=Path(cache_dir) if cache_dir else None,
        parallelism=int(pick(args.parallelism, "parallelism", 1)),
        seed=int(pick(args.seed, "seed", 0)),
        lenient=bool(getattr(args, "lenient", False) or file_values.get("lenient", False)),
        dump_matrices=bool(
            getattr(args, "dump_matrices", False) or file_values.get("dump_matrices", False)
        ),
        adapters=adapters,
    )
    config.validate()
    return config


def cmd_validate(args: argparse.Namespace) -> int:
    """Strict schema validation plus span-consistency diagnostics."""
    try:
        records = load_dataset(args.dataset, strictness="strict")
    except CorpusError as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL
    stats = dataset_stats(records)
    warnings = 0
    for record in records:
        for note in span_consistency_report(record):
            warnings += 1
            print(f"warning: {note}", file=sys.stderr)
    print(
        f"{args.dataset}: {stats.record_count} records, {stats.span_count} spans, "
        f"{stats.mean_skills_per_record:.2f} mean skills/record, "
        f"{warnings} span-consistency warnings"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Run every configured adapter over the dataset and emit the report."""
    config = _build_run_config(args)
    if not config.adapters:
        print("FATAL: no adapters configured (--adapters or config file)", file=sys.stderr)
        return EXIT_FATAL
    try:
        records = load_dataset(
            config.dataset, strictness="lenient" if config.lenient else "strict"
        )
    except CorpusError as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL

    provider = provider_from_config(config)
    try:
        cache = open_cache(config)
    except CacheError as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL
    dataset_hash = dataset_sha256(config.dataset)

    results: list[BenchmarkResult] = []
    adapter_errors: dict[str, str] = {}
    partial = False
    try:
        for manifest in config.adapters:
            try:
                evaluation = evaluate_adapter(
                    manifest, records, provider, cache, config, dataset_hash
                )
            except (AdapterError, EmbeddingError) as exc:
                logger.error("adapter %s failed: %s", manifest.name, exc)
                adapter_errors[manifest.name] = str(exc)
                partial = True
                continue
            if evaluation.failures:
                partial = True
                for failure in evaluation.failures:
                    logger.warning(
                        "adapter %s: record %s failed: %s",
                        manifest.name, failure.vacancy_id, failure.error,
                    )
            results.append(evaluation.result)
            m = evaluation.result.metrics
            print(
                f"{manifest.name}: F1={round2(m.f1)} P={round2(m.precision)} "
                f"R={round2(m.recall)} ({evaluation.result.evaluated} records, "
                f"{evaluation.result.failed} failed)"
            )
    finally:
        if cache is not None:
            cache.close()

    if not results:
        print("FATAL: every adapter failed", file=sys.stderr)
        return EXIT_FATAL
    fingerprint = fingerprint_for(config, provider)
    written = write_report(
        results,
        config.out_dir,
        fingerprint,
        extra_manifest={"adapter_errors": adapter_errors} if adapter_errors else None,
    )
    print(f"report written to {config.out_dir} ({len(written)} files)")
    return EXIT_PARTIAL if partial else EXIT_OK


def _load_predictions(path: Path) -> dict[str, list[str]]:
    """Predictions file: JSONL of {"id": ..., "skills": [...]}."""
    predictions: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "id" not in obj:
                raise CorpusError(f"{path}:{line_no}: expected an object with an 'id'")
            skills = obj.get("skills", [])
            if not isinstance(skills, list) or any(not isinstance(s, str) for s in skills):
                raise CorpusError(f"{path}:{line_no}: 'skills' must be a list of strings")
            predictions[str(obj["id"])] = skills
    return predictions


def cmd_score(args: argparse.Namespace) -> int:
    """Score a precomputed predictions file against a gold dataset."""
    config = _build_run_config(args)
    try:
        records = load_dataset(
            config.dataset, strictness="lenient" if config.lenient else "strict"
        )
        predictions = _load_predictions(Path(args.predictions))
    except CorpusError as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL

    known_ids = {r.id for r in records}
    unknown = sorted(set(predictions) - known_ids)
    if unknown:
        print(
            f"FATAL: predictions contain ids not in the dataset: {', '.join(unknown[:10])}",
            file=sys.stderr,
        )
        return EXIT_FATAL
    for record in records:
        if record.id not in predictions:
            logger.warning("no predictions for id %s; scoring as empty", record.id)
            predictions[record.id] = []

    provider = provider_from_config(config)
    try:
        cache = open_cache(config)
    except CacheError as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL
    model_name = args.model_name
    try:
        dump_dir = (
            config.out_dir / "matrices" / model_name if config.dump_matrices else None
        )
        scored = score_predictions(records, predictions, provider, cache, config, dump_dir)
    except EmbeddingError as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL
    finally:
        if cache is not None:
            cache.close()

    row = metrics_row(model_name, scored, config)
    result = BenchmarkResult(
        model=model_name,
        metrics=row,
        mean_latency_sec=None,
        model_size_params=None,
        total_cost_usd=0.0,
        cost_complete=False,
        evaluated=len(records),
        failed=0,
    )
    print(
        f"{model_name}: Accuracy={round2(row.accuracy)} F1={round2(row.f1)} "
        f"Precision={round2(row.precision)} Recall={round2(row.recall)} "
        f"ROC AUC={round2(row.auc)} "
        f"[{row.aggregation}, accuracy={row.accuracy_mode}, threshold={config.threshold}]"
    )
    if args.out is not None:
        fingerprint = fingerprint_for(config, provider)
        write_report([result], config.out_dir, fingerprint)
        print(f"report written to {config.out_dir}")
    return EXIT_OK


def cmd_fixtures(args: argparse.Namespace) -> int:
    """Generate a synthetic demo corpus in the dataset file format."""
    from .corpus import dump_dataset

    records = synthetic_corpus(args.records, args.seed)
    dump_dataset(records, args.out)
    stats = dataset_stats(records)
    print(
        f"wrote {stats.record_count} records ({stats.span_count} spans) to {args.out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillbench",
        description="Benchmark skill-extraction systems on span-annotated vacancy corpora.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="strictly validate a dataset file")
    p_validate.add_argument("dataset", help="dataset JSON file")
    p_validate.set_defaults(func=cmd_validate)

    def add_run_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--dataset", help="dataset JSON file")
        p.add_argument("--config", help="run config file (.json or .toml)")
        p.add_argument("--threshold", type=float, help="similarity threshold (default 0.85)")
        p.add_argument("--matcher", choices=["exact", "greedy"], help="matching mode")
        p.add_argument("--aggregation", choices=["micro", "macro"], help="metric aggregation")
        p.add_argument(
            "--accuracy-mode", dest="accuracy_mode",
            choices=["jaccard", "recall-compat"], help="accuracy column definition",
        )
        p.add_argument("--embedder", help='"mock" or an embedding service endpoint URL')
        p.add_argument("--embedder-name", dest="embedder_name", help="cache key name")
        p.add_argument("--embedder-version", dest="embedder_version", help="cache key version")
        p.add_argument("--out", help="output directory (default bench-out)")
        p.add_argument("--cache", help="embedding cache directory")
        p.add_argument("--parallelism", type=int, help="concurrent requests per adapter")
        p.add_argument("--seed", type=int, help="seed for AUC distractor sampling")
        p.add_argument("--lenient", action="store_true", help="drop invalid spans instead of failing")
        p.add_argument(
            "--dump-matrices", dest="dump_matrices", action="store_true",
            help="write per-vacancy similarity matrices as CSV",
        )

    p_eval = sub.add_parser("evaluate", help="run adapters over a dataset and report")
    add_run_flags(p_eval)
    p_eval.add_argument("--adapters", help="adapter manifest file (.json or .toml)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_score = sub.add_parser("score", help="score a predictions file offline")
    add_run_flags(p_score)
    p_score.add_argument("predictions", help='JSONL of {"id": ..., "skills": [...]}')
    p_score.add_argument(
        "--model-name", dest="model_name", default="predictions",
        help="name to report for this predictions file",
    )
    p_score.set_defaults(func=cmd_score)

    p_fix = sub.add_parser("fixtures", help="generate a synthetic demo corpus")
    p_fix.add_argument("--out", required=True, help="output dataset path")
    p_fix.add_argument("--records", type=int, default=50)
    p_fix.add_argument("--seed", type=int, default=7)
    p_fix.set_defaults(func=cmd_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"FATAL: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
