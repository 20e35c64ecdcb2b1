"""Overlapping tile grids, aspect-matched tile shapes and a random-tile baseline."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from entropytile.raster import SourceImage, round_half_up


def stride_for(tile: int, overlap: float) -> int:
    return max(1, round_half_up(tile * (1.0 - overlap)))


@dataclass(frozen=True)
class TileScale:
    scale_id: int
    tile_w: int
    tile_h: int
    overlap: float = 0.5

    def __post_init__(self) -> None:
        if self.tile_w < 1 or self.tile_h < 1:
            raise ValueError(f"tile must be at least 1x1, got {self.tile_w}x{self.tile_h}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError(f"overlap must be in [0, 1), got {self.overlap}")

    @property
    def stride_x(self) -> int:
        return stride_for(self.tile_w, self.overlap)

    @property
    def stride_y(self) -> int:
        return stride_for(self.tile_h, self.overlap)


def axis_origins(dim: int, tile: int, stride: int) -> np.ndarray:
    """Lattice origins ``0, s, 2s, ...`` plus a flush-to-edge origin if needed."""
    if tile > dim:
        return np.empty(0, dtype=np.int64)
    last = dim - tile
    origins = np.arange(0, last + 1, stride, dtype=np.int64)
    if origins[-1] != last:
        origins = np.append(origins, last)
    return origins


@dataclass(frozen=True)
class TileGrid:
    """Cartesian grid of tile origins; tiles are indexed row-major (y outer)."""

    scale: TileScale
    xs: np.ndarray
    ys: np.ndarray

    @property
    def count(self) -> int:
        return int(self.xs.size * self.ys.size)

    @property
    def origins(self) -> list[tuple[int, int]]:
        return [(int(x), int(y)) for y in self.ys for x in self.xs]

    def __len__(self) -> int:
        return self.count


@dataclass
class TileRecord:
    image_id: str
    scale_id: int
    tile_index: int
    x: int
    y: int
    w: int
    h: int
    entropy: float | None = None
    retained: bool = False

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.image_id, self.scale_id, self.tile_index)

    def to_dict(self) -> dict:
        return asdict(self)


def generate_grid(img: SourceImage, scale: TileScale) -> TileGrid:
    """Overlapping tile grid; empty when the tile does not fit the image."""
    xs = axis_origins(img.width_px, scale.tile_w, scale.stride_x)
    ys = axis_origins(img.height_px, scale.tile_h, scale.stride_y)
    if xs.size == 0 or ys.size == 0:
        xs = ys = np.empty(0, dtype=np.int64)
    return TileGrid(scale, xs, ys)


def grid_records(img: SourceImage, grid: TileGrid) -> list[TileRecord]:
    s = grid.scale
    return [
        TileRecord(img.image_id, s.scale_id, i, x, y, s.tile_w, s.tile_h)
        for i, (x, y) in enumerate(grid.origins)
    ]


def rectangular_scale(img: SourceImage, base_side: int, overlap: float, scale_id: int = 1) -> TileScale:
    """Tile with the image's aspect ratio and roughly ``base_side**2`` area."""
    if base_side < 1:
        raise ValueError("base_side must be >= 1")
    root_ar = math.sqrt(img.width_px / img.height_px)
    tile_w = round_half_up(base_side * root_ar)
    tile_h = round_half_up(base_side / root_ar)
    if tile_w < 1 or tile_h < 1:
        raise ValueError(
            f"{img.image_id}: aspect {img.width_px}x{img.height_px} gives degenerate tile {tile_w}x{tile_h}"
        )
    return TileScale(scale_id, tile_w, tile_h, overlap)


def extract_tile(img: SourceImage, rec: TileRecord) -> np.ndarray:
    """View of the ``rec.w x rec.h`` block at ``(rec.x, rec.y)``."""
    if rec.w < 1 or rec.h < 1 or rec.x < 0 or rec.y < 0:
        raise ValueError(f"invalid tile geometry {rec}")
    if rec.x + rec.w > img.width_px or rec.y + rec.h > img.height_px:
        raise ValueError(
            f"tile ({rec.x}, {rec.y}, {rec.w}, {rec.h}) outside {img.width_px}x{img.height_px} image"
        )
    return img.pixels[rec.y : rec.y + rec.h, rec.x : rec.x + rec.w]


def random_tile_sample(img: SourceImage, scale: TileScale, n: int, seed) -> list[TileRecord]:
    """``n`` tiles whose origins are drawn uniformly, with replacement, from every in-bounds pixel."""
    if n < 1:
        raise ValueError("n must be >= 1")
    max_x = img.width_px - scale.tile_w
    max_y = img.height_px - scale.tile_h
    if max_x < 0 or max_y < 0:
        raise ValueError(
            f"{scale.tile_w}x{scale.tile_h} tile exceeds {img.width_px}x{img.height_px} image {img.image_id}"
        )
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, max_x + 1, size=n)
    ys = rng.integers(0, max_y + 1, size=n)
    return [
        TileRecord(img.image_id, scale.scale_id, i, int(x), int(y), scale.tile_w, scale.tile_h)
        for i, (x, y) in enumerate(zip(xs, ys))
    ]
