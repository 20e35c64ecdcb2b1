"""Image loading, luminance conversion, resolution screening and resampling."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luma weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


@dataclass
class SourceImage:
    """An 8-bit luminance raster plus its physical resolution (px/cm)."""

    image_id: str
    pixels: np.ndarray
    native_resolution: float
    label: int | None = None

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise ValueError(f"{self.image_id}: expected a 2-D luminance array, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError(f"{self.image_id}: zero-sized image {pixels.shape}")
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255 or not np.all(np.mod(pixels, 1) == 0)):
                raise ValueError(f"{self.image_id}: pixel values must be integers in [0, 255]")
            pixels = pixels.astype(np.uint8)
        self.pixels = np.ascontiguousarray(pixels)
        if not (self.native_resolution > 0 and math.isfinite(self.native_resolution)):
            raise ValueError(f"{self.image_id}: resolution must be positive, got {self.native_resolution}")
        if self.label not in (None, 0, 1):
            raise ValueError(f"{self.image_id}: label must be 0, 1 or None, got {self.label!r}")

    @property
    def width_px(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height_px(self) -> int:
        return int(self.pixels.shape[0])


@dataclass(frozen=True)
class ResolutionPolicy:
    target_resolution: float
    max_downscale_ratio: float = 5.0
    allow_upsampling: bool = False

    def __post_init__(self) -> None:
        if not self.target_resolution > 0:
            raise ValueError("target_resolution must be positive")
        if not self.max_downscale_ratio >= 1:
            raise ValueError("max_downscale_ratio must be >= 1")


@dataclass(frozen=True)
class ScreenVerdict:
    accepted: bool
    reason: str
    ratio: float = field(default=float("nan"))


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    """Convert an (H, W, 3) RGB array to 8-bit luma, rounding half up."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = LUMA_WEIGHTS
    luma = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def load_image(
    path: str | os.PathLike,
    native_resolution: float,
    label: int | None = None,
    image_id: str | None = None,
) -> SourceImage:
    """Decode a PNG/JPEG file into a :class:`SourceImage`.

    Color inputs are reduced to luminance; grayscale passes through unchanged.
    """
    if not native_resolution > 0:
        raise ValueError(f"nonpositive resolution {native_resolution} for {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise ValueError(f"{path}: only 8-bit images are supported (mode {mode})")
            if mode == "L":
                pixels = np.array(im, dtype=np.uint8)
            elif mode == "LA":
                pixels = np.array(im.getchannel("L"), dtype=np.uint8)
            elif mode == "1":
                pixels = np.array(im.convert("L"), dtype=np.uint8)
            else:
                pixels = to_luminance(np.array(im.convert("RGB")))
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"cannot decode image {path}: {exc}") from exc
    if pixels.size == 0:
        raise ValueError(f"zero-sized image {path}")
    if image_id is None:
        image_id = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return SourceImage(image_id, pixels, float(native_resolution), label)


def screen_candidate(img: SourceImage, policy: ResolutionPolicy) -> ScreenVerdict:
    ratio = img.native_resolution / policy.target_resolution
    if ratio < 1 and not policy.allow_upsampling:
        return ScreenVerdict(False, "rejected: upsampling", ratio)
    if ratio > policy.max_downscale_ratio:
        return ScreenVerdict(
            False, f"rejected: downscale ratio {ratio:.3g} > {policy.max_downscale_ratio:g}", ratio
        )
    return ScreenVerdict(True, "accepted", ratio)


def resampled_shape(img: SourceImage, target_resolution: float) -> tuple[int, int]:
    """(height, width) after resampling to ``target_resolution``."""
    scale = target_resolution / img.native_resolution
    return round_half_up(img.height_px * scale), round_half_up(img.width_px * scale)


def resample(img: SourceImage, target_resolution: float) -> SourceImage:
    """Resize to ``target_resolution`` px/cm using area averaging.

    Dimensions round half up. When they are unchanged the pixels are copied
    verbatim, so resampling at the native resolution is exact.
    """
    if not target_resolution > 0:
        raise ValueError("target_resolution must be positive")
    out_h, out_w = resampled_shape(img, target_resolution)
    if out_h < 1 or out_w < 1:
        raise ValueError(
            f"{img.image_id}: resampling {img.width_px}x{img.height_px} to {target_resolution} px/cm "
            f"gives an empty image"
        )
    if (out_h, out_w) == (img.height_px, img.width_px):
        pixels = img.pixels.copy()
    else:
        # BOX is Pillow's area-averaging filter; it also handles the rare upsampling case.
        pixels = np.asarray(Image.fromarray(img.pixels).resize((out_w, out_h), Image.BOX))
    return replace(img, pixels=pixels, native_resolution=float(target_resolution))


def save_png(img: SourceImage, path: str | os.PathLike) -> None:
    Image.fromarray(img.pixels).save(path, format="PNG", optimize=False)
