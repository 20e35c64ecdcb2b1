"""Tile-to-image probability aggregation and multi-scale weighting.

Decision rule throughout: a score is *attributed* (class 1) iff
``score >= boundary``; an exact tie at the boundary is attributed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

BOUNDARY = 0.5
METHODS = ("average", "majority")
# E values closer than this are treated as tied during weight search.
_E_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ProbabilityVector:
    image_id: str
    scale_id: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64).ravel()
        if probs.size and (np.isnan(probs).any() or probs.min() < 0.0 or probs.max() > 1.0):
            raise ValueError(f"{self.image_id}/{self.scale_id}: probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return int(self.probs.size)


def _probs(pv) -> np.ndarray:
    probs = pv.probs if isinstance(pv, ProbabilityVector) else np.asarray(pv, dtype=np.float64).ravel()
    if probs.size == 0:
        raise ValueError("cannot aggregate an empty probability vector")
    return probs


def average_probability(pv) -> float:
    return float(np.mean(_probs(pv)))


def majority_vote(pv, boundary: float = BOUNDARY) -> float:
    """Fraction of tiles whose probability is at or above the boundary."""
    probs = _probs(pv)
    return float(np.count_nonzero(probs >= boundary) / probs.size)


def classify(score: float, boundary: float = BOUNDARY) -> int:
    return int(score >= boundary)


def tile_variance(pv) -> float:
    """Population variance (divide by N) of the tile probabilities."""
    return float(np.var(_probs(pv)))


def mean_variance(pvs: Sequence) -> float:
    if len(pvs) == 0:
        raise ValueError("mean variance over an empty set")
    return float(np.mean([tile_variance(pv) for pv in pvs]))


def image_score(pv, method: str = "average", boundary: float = BOUNDARY) -> float:
    if method == "average":
        return average_probability(pv)
    if method == "majority":
        return majority_vote(pv, boundary)
    raise ValueError(f"unknown aggregation method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class ErrorReport:
    misclassified: list[tuple[str, float]]
    n: int
    E: float
    accuracy: float
    total: int


def classification_error(
    results: Sequence[tuple[int, float]],
    image_ids: Sequence[str] | None = None,
    boundary: float = BOUNDARY,
) -> ErrorReport:
    """Accuracy and the mean L1 distance ``|boundary - y_hat|`` over misclassified images.

    ``results`` holds ``(true_label, score)`` pairs. E is 0 when nothing is
    misclassified.
    """
    if len(results) == 0:
        raise ValueError("classification error of an empty result set")
    if image_ids is None:
        image_ids = [str(i) for i in range(len(results))]
    wrong = [
        (iid, float(score))
        for iid, (label, score) in zip(image_ids, results)
        if classify(score, boundary) != int(label)
    ]
    n = len(wrong)
    err = float(np.mean([abs(boundary - s) for _, s in wrong])) if n else 0.0
    return ErrorReport(wrong, n, err, 1.0 - n / len(results), len(results))


def combine_scales(scores: Mapping[int, float] | Sequence[float], weights: Mapping[int, float] | Sequence[float]) -> float:
    """Convex combination ``sum_k w_k * score_k``."""
    if isinstance(scores, Mapping) != isinstance(weights, Mapping):
        raise TypeError("scores and weights must both be mappings or both be sequences")
    if isinstance(scores, Mapping):
        if set(scores) != set(weights):
            raise ValueError(f"scale mismatch: scores {sorted(scores)} vs weights {sorted(weights)}")
        keys = sorted(scores)
        s = np.array([scores[k] for k in keys], dtype=np.float64)
        w = np.array([weights[k] for k in keys], dtype=np.float64)
    else:
        s = np.asarray(scores, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64)
        if s.shape != w.shape:
            raise ValueError(f"scale mismatch: {s.size} scores vs {w.size} weights")
    check_simplex(w)
    return float(np.clip(w @ s, 0.0, 1.0))


def check_simplex(w: np.ndarray, tol: float = 1e-9) -> None:
    w = np.asarray(w, dtype=np.float64)
    if w.size == 0 or (w < -tol).any() or abs(w.sum() - 1.0) > tol:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {w.tolist()}")


def simplex_grid(k: int, m: int) -> np.ndarray:
    """All nonnegative integer k-vectors summing to m, lexicographically descending."""
    if k == 1:
        return np.array([[m]], dtype=np.int64)
    rows = []
    for first in range(m, -1, -1):
        rest = simplex_grid(k - 1, m - first)
        rows.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(rows)


def optimize_weights(
    scores: np.ndarray,
    labels: Sequence[int],
    grid_step: float = 0.01,
    boundary: float = BOUNDARY,
) -> np.ndarray:
    """Grid search over the weight simplex.

    ``scores`` has shape ``(K, N)``: per-scale image scores for N validation
    images. The objective is lexicographic: highest accuracy, then lowest E,
    then the largest mean signed margin ``(2y - 1)(score - boundary)``, then
    the weights closest to uniform, then the earliest vector in descending
    lexicographic order (favouring lower scale indices).
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64)
    k, n = scores.shape
    if n == 0 or labels.size != n:
        raise ValueError(f"need one label per validation image ({labels.size} labels, {n} images)")
    if k == 1:
        return np.ones(1)
    m = int(round(1.0 / grid_step))
    if m < 1 or abs(m * grid_step - 1.0) > 1e-9:
        raise ValueError(f"grid_step must divide 1, got {grid_step}")
    units = simplex_grid(k, m)
    combined = (units @ scores) / m
    decisions = combined >= boundary
    wrong = decisions != labels.astype(bool)[None, :]
    n_wrong = wrong.sum(axis=1)
    dist = np.where(wrong, np.abs(boundary - combined), 0.0).sum(axis=1)
    err = np.divide(dist, n_wrong, out=np.zeros_like(dist), where=n_wrong > 0)

    best = n_wrong == n_wrong.min()
    best &= err <= err[best].min() + _E_TIE_TOL
    # among equally accurate, equally wrong weights prefer the most decisive
    sign = 2.0 * labels - 1.0
    margin = ((combined - boundary) * sign[None, :]).mean(axis=1)
    best &= margin >= margin[best].max() - _E_TIE_TOL
    # squared distance to uniform in integer units: sum_j (K c_j - m)^2
    spread = ((units * k - m) ** 2).sum(axis=1)
    best &= spread == spread[best].min()
    return units[np.flatnonzero(best)[0]] / m


@dataclass
class AggregationResult:
    image_id: str
    method: str
    scale_scores: dict[int, float]
    scale_variances: dict[int, float]
    tile_counts: dict[int, int]
    final_score: float
    decision: int
    weights: dict[int, float] = field(default_factory=dict)


def aggregate(
    pvs: Sequence[ProbabilityVector],
    method: str = "average",
    weights: Mapping[int, float] | None = None,
    boundary: float = BOUNDARY,
) -> AggregationResult:
    """Aggregate one image's per-scale probability vectors.

    Without ``weights`` a single scale is used as-is and several scales are
    weighted uniformly.
    """
    if not pvs:
        raise ValueError("no probability vectors to aggregate")
    ids = {pv.image_id for pv in pvs}
    if len(ids) != 1:
        raise ValueError(f"probability vectors from several images: {sorted(ids)}")
    scale_scores = {pv.scale_id: image_score(pv, method, boundary) for pv in pvs}
    if len(scale_scores) != len(pvs):
        raise ValueError("duplicate scale ids")
    if weights is None:
        weights = {k: 1.0 / len(scale_scores) for k in scale_scores}
    final = combine_scales(scale_scores, dict(weights))
    return AggregationResult(
        image_id=pvs[0].image_id,
        method=method,
        scale_scores=scale_scores,
        scale_variances={pv.scale_id: tile_variance(pv) for pv in pvs},
        tile_counts={pv.scale_id: len(pv) for pv in pvs},
        final_score=final,
        decision=classify(final, boundary),
        weights=dict(weights),
    )
