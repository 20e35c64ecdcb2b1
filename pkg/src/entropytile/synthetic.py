"""Labeled synthetic images whose class signal lives only in high-entropy patches.

Each image is a nearly flat background (one gray level with sparse +/-1
speckle) holding a few textured patches. Class 1 patches are fine
checkerboards, class 0 patches are diagonal stripes, and the two classes use
different pairs of gray levels, all with per-pixel jitter. The background
level is drawn independently of the class from a range between the patch
levels, so background tiles carry no label information: a classifier only
sees the class through tiles that overlap a patch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from entropytile.raster import SourceImage


@dataclass(frozen=True)
class SyntheticSpec:
    height: int = 160
    width: int = 160
    n_patches: int = 3
    patch_size: int = 36
    jitter: float = 6.0
    speckle: float = 0.05
    px_per_cm: float = 25.0
    # (dark, light) gray levels of the patch textures per class
    levels_class1: tuple[int, int] = (60, 170)
    levels_class0: tuple[int, int] = (85, 195)
    background_range: tuple[int, int] = (110, 150)


def _texture(kind: int, size: int, levels: tuple[int, int], rng: np.random.Generator, jitter: float) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    if kind == 1:
        cell = 2
        mask = ((yy // cell) + (xx // cell)) % 2 == 0
    else:
        period = 6
        mask = ((yy + xx) % period) < period // 2
    base = np.where(mask, levels[0], levels[1]).astype(np.float64)
    return base + rng.normal(0.0, jitter, base.shape)


def _place_patches(rng: np.random.Generator, spec: SyntheticSpec) -> list[tuple[int, int]]:
    spots: list[tuple[int, int]] = []
    p = spec.patch_size
    for _ in range(1000):
        if len(spots) == spec.n_patches:
            break
        y = int(rng.integers(0, spec.height - p + 1))
        x = int(rng.integers(0, spec.width - p + 1))
        if all(abs(y - sy) >= p or abs(x - sx) >= p for sy, sx in spots):
            spots.append((y, x))
    return spots


def synthetic_image(image_id: str, label: int, rng: np.random.Generator, spec: SyntheticSpec = SyntheticSpec()) -> SourceImage:
    lo, hi = spec.background_range
    bg = int(rng.integers(lo, hi + 1))
    canvas = np.full((spec.height, spec.width), float(bg))
    speckle = rng.random(canvas.shape) < spec.speckle
    canvas[speckle] += rng.choice([-1.0, 1.0], size=int(speckle.sum()))
    levels = spec.levels_class1 if label == 1 else spec.levels_class0
    for y, x in _place_patches(rng, spec):
        p = spec.patch_size
        canvas[y : y + p, x : x + p] = _texture(label, p, levels, rng, spec.jitter)
    pixels = np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)
    return SourceImage(image_id, pixels, spec.px_per_cm, label)


def generate_synthetic(
    images_per_class: int,
    seed: int = 0,
    spec: SyntheticSpec = SyntheticSpec(),
) -> list[SourceImage]:
    """``2 * images_per_class`` labeled images, ids ``syn-<label>-<index>``."""
    if images_per_class < 1:
        raise ValueError("images_per_class must be >= 1")
    if spec.patch_size < 4 or spec.patch_size > min(spec.height, spec.width):
        raise ValueError(f"patch size {spec.patch_size} does not fit a {spec.width}x{spec.height} image")
    rng = np.random.default_rng(seed)
    images = []
    for label in (1, 0):
        for i in range(images_per_class):
            images.append(synthetic_image(f"syn-{label}-{i:03d}", label, rng, spec))
    return images
