"""Entropy-criterion tile selection and tile-entropy distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from entropytile.entropy import MAX_BITS
from entropytile.tiler import TileRecord

DEFAULT_BIN_WIDTH = 0.05


@dataclass(frozen=True)
class SiftPolicy:
    """Keep tiles with ``entropy >= relax * image_entropy``.

    ``relax=1.0`` is the strict criterion, ``0.99`` relaxes it by 1%.
    ``invert=True`` keeps the complement (the low-entropy tiles) instead.
    """

    relax: float = 1.0
    invert: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.relax <= 1.0:
            raise ValueError(f"relax must be in (0, 1], got {self.relax}")

    def threshold(self, image_h: float) -> float:
        return self.relax * image_h


@dataclass(frozen=True)
class SiftResult:
    image_id: str | None
    scale_id: int | None
    retained_count: int
    candidate_count: int
    threshold_bits: float


def sift(tiles: Sequence[TileRecord], image_h: float, policy: SiftPolicy = SiftPolicy()) -> SiftResult:
    """Mark ``retained`` on each record in place and tally the result."""
    threshold = policy.threshold(image_h)
    kept = 0
    for rec in tiles:
        if rec.entropy is None:
            raise ValueError(f"tile {rec.key} has no entropy")
        passes = rec.entropy >= threshold
        rec.retained = (not passes) if policy.invert else passes
        kept += rec.retained
    first = tiles[0] if tiles else None
    return SiftResult(
        image_id=first.image_id if first else None,
        scale_id=first.scale_id if first else None,
        retained_count=kept,
        candidate_count=len(tiles),
        threshold_bits=threshold,
    )


def retention_rate(result: SiftResult) -> float:
    if result.candidate_count < 1:
        raise ValueError("retention rate undefined with zero candidate tiles")
    return result.retained_count / result.candidate_count


@dataclass(frozen=True)
class EntropyDistribution:
    bin_edges: np.ndarray
    counts: np.ndarray
    mean: float
    image_entropy: float | None = None

    def rows(self):
        """``(bin_low, bin_high, count)`` for every bin."""
        for i, c in enumerate(self.counts):
            yield float(self.bin_edges[i]), float(self.bin_edges[i + 1]), int(c)

    def occupied(self) -> dict[float, int]:
        return {float(self.bin_edges[i]): int(c) for i, c in enumerate(self.counts) if c}


def entropy_distribution(
    tiles: Sequence[TileRecord] | Sequence[float],
    bin_width: float = DEFAULT_BIN_WIDTH,
    image_entropy: float | None = None,
) -> EntropyDistribution:
    """Histogram of tile entropies over ``[0, 8]`` bits.

    Bins are half-open ``[lo, hi)`` except the last, which includes 8.0.
    """
    if len(tiles) == 0:
        raise ValueError("entropy distribution of an empty tile set")
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    values = np.array([t.entropy if isinstance(t, TileRecord) else t for t in tiles], dtype=np.float64)
    n_bins = max(1, math.ceil(MAX_BITS / bin_width - 1e-9))
    edges = np.arange(n_bins + 1, dtype=np.float64) * bin_width
    # the epsilon keeps values sitting exactly on an edge (e.g. 1.0 / 0.05) in the upper bin
    idx = np.floor(values / bin_width + 1e-9).astype(np.int64)
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return EntropyDistribution(edges, counts, float(values.mean()), image_entropy)
