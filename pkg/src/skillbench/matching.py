"""One-to-one matching of predicted vs gold skills above a similarity threshold.

Two skills count as equivalent when the cosine similarity of their embeddings
is greater than or equal to the threshold (inclusive; default 0.85).

``match_exact`` is the default matcher: it finds a maximum-cardinality
one-to-one matching over the eligible cells, maximizes total similarity among
those, and breaks remaining ties lexicographically on (pred index, gold
index), so results are reproducible across runs and platforms. Similarities
are compared at a resolution of 1e-9 for the tie-breaking arithmetic (kept
exact in integers); threshold eligibility uses the raw float values.

``match_greedy`` is an opt-in fast mode: highest-similarity eligible cell
first, skipping used rows and columns. It can return fewer pairs than the
exact matcher.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embedding import EmbeddingCache, EmbeddingProvider, cosine_similarity, embed_batch
from .metrics import ConfusionCounts

_SCALE = 10**9  # similarity resolution for exact integer arithmetic


@dataclass(frozen=True)
class MatchOutcome:
    """A one-to-one pairing plus the leftovers on each side."""

    pairs: tuple[tuple[int, int, float], ...]  # (pred index, gold index, similarity)
    unmatched_pred: tuple[int, ...]
    unmatched_gold: tuple[int, ...]
    threshold: float

    @property
    def cardinality(self) -> int:
        return len(self.pairs)

    @property
    def total_similarity(self) -> float:
        return sum(sim for _, _, sim in self.pairs)


def similarity_matrix(
    pred: list[str] | tuple[str, ...],
    gold: list[str] | tuple[str, ...],
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None = None,
) -> np.ndarray:
    """P x G matrix of cosines between predicted and gold skill embeddings."""
    if not pred or not gold:
        return np.zeros((len(pred), len(gold)), dtype=np.float64)
    vectors = embed_batch(provider, list(pred) + list(gold), cache)
    pred_vecs = vectors[: len(pred)]
    gold_vecs = vectors[len(pred) :]
    m = np.empty((len(pred), len(gold)), dtype=np.float64)
    for i, pv in enumerate(pred_vecs):
        for j, gv in enumerate(gold_vecs):
            m[i, j] = cosine_similarity(pv, gv)
    return m


def _check_inputs(m: np.ndarray, threshold: float) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"similarity matrix must be 2-D, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError("similarity matrix contains non-finite values")
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    return m


def _outcome(m: np.ndarray, pairs: list[tuple[int, int]], threshold: float) -> MatchOutcome:
    pairs = sorted(pairs)
    used_rows = {i for i, _ in pairs}
    used_cols = {j for _, j in pairs}
    return MatchOutcome(
        pairs=tuple((i, j, float(m[i, j])) for i, j in pairs),
        unmatched_pred=tuple(i for i in range(m.shape[0]) if i not in used_rows),
        unmatched_gold=tuple(j for j in range(m.shape[1]) if j not in used_cols),
        threshold=threshold,
    )


def _solve_value(sim_int: np.ndarray, eligible: np.ndarray) -> tuple[int, int]:
    """Best (cardinality, total scaled similarity) over one-to-one matchings.

    Weights each eligible cell sim + C with C large enough that cardinality
    dominates; all weights are integer-valued floats so comparisons stay
    exact.
    """
    p, g = eligible.shape
    if p == 0 or g == 0 or not eligible.any():
        return 0, 0
    c = (min(p, g) + 1) * _SCALE
    weights = np.where(eligible, sim_int + c, 0).astype(np.float64)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    cardinality = 0
    total = 0
    for i, j in zip(rows, cols):
        if eligible[i, j]:
            cardinality += 1
            total += int(sim_int[i, j])
    return cardinality, total


def match_exact(m: np.ndarray, threshold: float) -> MatchOutcome:
    """Maximum-cardinality matching, then maximum total similarity, then
    lexicographically smallest pair list."""
    m = _check_inputs(m, threshold)
    p, g = m.shape
    eligible = m >= threshold
    sim_int = np.rint(np.clip(m, -1.0, 1.0) * _SCALE).astype(np.int64)
    target_card, target_total = _solve_value(sim_int, eligible)

    pairs: list[tuple[int, int]] = []
    col_free = np.ones(g, dtype=bool)
    fixed_card = 0
    fixed_total = 0
    for i in range(p):
        if fixed_card == target_card:
            break
        for j in range(g):
            if not eligible[i, j] or not col_free[j]:
                continue
            cols = col_free.copy()
            cols[j] = False
            sub_card, sub_total = _solve_value(
                sim_int[i + 1 :][:, cols], eligible[i + 1 :][:, cols]
            )
            if (
                fixed_card + 1 + sub_card == target_card
                and fixed_total + int(sim_int[i, j]) + sub_total == target_total
            ):
                pairs.append((i, j))
                col_free[j] = False
                fixed_card += 1
                fixed_total += int(sim_int[i, j])
                break
    return _outcome(m, pairs, threshold)


def match_greedy(m: np.ndarray, threshold: float) -> MatchOutcome:
    """Highest-similarity-first matching; ties broken by (pred, gold) indices."""
    m = _check_inputs(m, threshold)
    p, g = m.shape
    cells = [
        (-m[i, j], i, j) for i in range(p) for j in range(g) if m[i, j] >= threshold
    ]
    cells.sort()
    pairs: list[tuple[int, int]] = []
    row_used = [False] * p
    col_used = [False] * g
    for _, i, j in cells:
        if row_used[i] or col_used[j]:
            continue
        row_used[i] = True
        col_used[j] = True
        pairs.append((i, j))
    return _outcome(m, pairs, threshold)


def confusion_counts(outcome: MatchOutcome) -> ConfusionCounts:
    """TP = matched pairs, FP = leftover predictions, FN = leftover gold."""
    return ConfusionCounts(
        tp=len(outcome.pairs),
        fp=len(outcome.unmatched_pred),
        fn=len(outcome.unmatched_gold),
    )


def matrix_to_csv(m: np.ndarray, pred: list[str], gold: list[str]) -> str:
    """Debug rendering of a similarity matrix with skill labels."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pred\\gold"] + list(gold))
    for i, label in enumerate(pred):
        writer.writerow([label] + [f"{m[i, j]:.6f}" for j in range(m.shape[1])])
    return buf.getvalue()
