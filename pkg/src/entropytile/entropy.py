"""Shannon entropy of 8-bit images and of dense tile grids.

``tile_entropies`` has two interchangeable backends:

* ``numba``: a sliding histogram per tile row. Moving the window right by
  ``dx`` subtracts the ``dx`` columns that leave and adds the ``dx`` columns
  that enter, so each step costs ``O(dx * h)`` instead of ``O(w * h)``.
* ``numpy``: an integral histogram per tile row. Per-column histograms of the
  row band are accumulated along x, and every tile's histogram is a difference
  of two cumulative rows.

Both produce exact integer counts; entropies differ from the naive per-tile
computation only by floating-point summation order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from entropytile._accel import njit, resolve_backend

if TYPE_CHECKING:
    from entropytile.raster import SourceImage
    from entropytile.tiler import TileGrid

N_LEVELS = 256
MAX_BITS = 8.0


@dataclass(frozen=True)
class Histogram256:
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (N_LEVELS,):
            raise ValueError(f"expected {N_LEVELS} bins, got shape {counts.shape}")
        if (counts < 0).any():
            raise ValueError("histogram counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: Histogram256) -> Histogram256:
        return Histogram256(self.counts + other.counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Histogram256):
            return NotImplemented
        return bool(np.array_equal(self.counts, other.counts))

    __hash__ = None  # type: ignore[assignment]


def _pixels_of(img) -> np.ndarray:
    pixels = img.pixels if hasattr(img, "pixels") else img
    pixels = np.asarray(pixels)
    if pixels.dtype != np.uint8:
        raise TypeError(f"expected uint8 pixels, got {pixels.dtype}")
    return pixels


def histogram(img, x: int = 0, y: int = 0, w: int | None = None, h: int | None = None) -> Histogram256:
    """256-bin histogram of the ``w x h`` region at ``(x, y)``.

    ``img`` may be a :class:`SourceImage` or a 2-D uint8 array. The whole
    image is used when ``w``/``h`` are omitted.
    """
    pixels = _pixels_of(img)
    height, width = pixels.shape
    w = width - x if w is None else w
    h = height - y if h is None else h
    if w < 1 or h < 1:
        raise ValueError(f"empty region {w}x{h}")
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(f"region ({x}, {y}, {w}, {h}) outside {width}x{height} image")
    region = pixels[y : y + h, x : x + w]
    return Histogram256(np.bincount(region.ravel(), minlength=N_LEVELS))


def entropy_from_counts(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits along the last axis of an integer count array."""
    counts = np.asarray(counts)
    total = counts.sum(axis=-1, keepdims=True)
    if (total < 1).any():
        raise ValueError("entropy of an empty histogram is undefined")
    p = counts / total
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(counts > 0, p * np.log2(np.where(counts > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def shannon_entropy(h: Histogram256) -> float:
    """H = -sum_k p_k log2 p_k with p_k = counts[k] / total and 0 log 0 = 0."""
    if h.total < 1:
        raise ValueError("entropy of an empty histogram is undefined")
    return float(entropy_from_counts(h.counts))


def image_entropy(img) -> float:
    return shannon_entropy(histogram(img))


@njit(cache=True, nogil=True)
def _entropy_of(hist, total):
    inv = 1.0 / total
    acc = 0.0
    for k in range(hist.shape[0]):
        c = hist[k]
        if c > 0:
            p = c * inv
            acc -= p * np.log2(p)
    return acc


@njit(cache=True, nogil=True)
def _add_block(pixels, hist, x0, x1, y0, y1, sign):
    for r in range(y0, y1):
        for c in range(x0, x1):
            hist[pixels[r, c]] += sign


@njit(cache=True, nogil=True)
def _sliding_grid_entropies(pixels, xs, ys, w, h):
    out = np.empty((ys.shape[0], xs.shape[0]), dtype=np.float64)
    hist = np.zeros(256, dtype=np.int64)
    total = w * h
    for j in range(ys.shape[0]):
        y0 = ys[j]
        y1 = y0 + h
        hist[:] = 0
        _add_block(pixels, hist, xs[0], xs[0] + w, y0, y1, 1)
        out[j, 0] = _entropy_of(hist, total)
        for i in range(1, xs.shape[0]):
            prev = xs[i - 1]
            cur = xs[i]
            if cur - prev >= w:
                hist[:] = 0
                _add_block(pixels, hist, cur, cur + w, y0, y1, 1)
            else:
                _add_block(pixels, hist, prev, cur, y0, y1, -1)
                _add_block(pixels, hist, prev + w, cur + w, y0, y1, 1)
            out[j, i] = _entropy_of(hist, total)
    return out


def _integral_grid_entropies(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray, w: int, h: int) -> np.ndarray:
    out = np.empty((ys.size, xs.size), dtype=np.float64)
    x_lo, x_hi = int(xs[0]), int(xs[-1]) + w
    span = x_hi - x_lo
    col_offsets = (np.arange(span, dtype=np.int64) * N_LEVELS)[None, :]
    for j, y in enumerate(ys):
        band = pixels[y : y + h, x_lo:x_hi].astype(np.int64)
        col_hist = np.bincount((band + col_offsets).ravel(), minlength=span * N_LEVELS)
        cum = np.zeros((span + 1, N_LEVELS), dtype=np.int64)
        np.cumsum(col_hist.reshape(span, N_LEVELS), axis=0, out=cum[1:])
        rel = xs - x_lo
        out[j] = entropy_from_counts(cum[rel + w] - cum[rel])
    return out


def grid_entropy_matrix(img, xs, ys, w: int, h: int, backend: str | None = None) -> np.ndarray:
    """Entropies of all tiles at origins ``ys x xs``, shape ``(len(ys), len(xs))``.

    ``xs`` and ``ys`` must be strictly increasing and keep every tile in bounds.
    """
    pixels = np.ascontiguousarray(_pixels_of(img))
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    ys = np.ascontiguousarray(ys, dtype=np.int64)
    if xs.size == 0 or ys.size == 0:
        return np.empty((ys.size, xs.size), dtype=np.float64)
    height, width = pixels.shape
    if w < 1 or h < 1:
        raise ValueError(f"empty tile {w}x{h}")
    if xs[0] < 0 or ys[0] < 0 or xs[-1] + w > width or ys[-1] + h > height:
        raise ValueError(f"tile grid exceeds {width}x{height} image")
    if (np.diff(xs) <= 0).any() or (np.diff(ys) <= 0).any():
        raise ValueError("grid origins must be strictly increasing")
    if resolve_backend(backend) == "numba":
        return _sliding_grid_entropies(pixels, xs, ys, int(w), int(h))
    return _integral_grid_entropies(pixels, xs, ys, int(w), int(h))


def tile_entropies(img: SourceImage, grid: TileGrid, backend: str | None = None) -> list[tuple[int, float]]:
    """``(tile_index, entropy)`` for every tile of ``grid`` in row-major order."""
    mat = grid_entropy_matrix(img, grid.xs, grid.ys, grid.scale.tile_w, grid.scale.tile_h, backend=backend)
    return list(enumerate(mat.ravel().tolist()))
