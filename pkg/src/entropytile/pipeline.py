"""Per-image tiling, sifting, selection and scoring."""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from entropytile.aggregator import AggregationResult, ProbabilityVector, aggregate, image_score
from entropytile.classifier import BaselineModel, featurize_tiles
from entropytile.config import PipelineConfig
from entropytile.entropy import grid_entropy_matrix, image_entropy
from entropytile.raster import SourceImage
from entropytile.sifter import SiftPolicy, SiftResult, sift
from entropytile.tiler import TileRecord, TileScale, generate_grid, grid_records, random_tile_sample, rectangular_scale


def image_scales(img: SourceImage, cfg: PipelineConfig) -> list[TileScale]:
    """One scale per configured tile size; ``scale_id`` is its 1-based position."""
    scales = []
    for k, side in enumerate(cfg.tile_sizes, start=1):
        if cfg.rectangular:
            scales.append(rectangular_scale(img, int(side), cfg.overlap, scale_id=k))
        else:
            scales.append(TileScale(k, int(side), int(side), cfg.overlap))
    return scales


@dataclass
class SiftedImage:
    """All candidate tiles of one image, per scale, with entropies and sift flags."""

    image_id: str
    image_entropy: float
    candidates: dict[int, list[TileRecord]]
    results: dict[int, SiftResult]


def tile_and_sift(img: SourceImage, cfg: PipelineConfig, backend: str | None = None) -> SiftedImage:
    h_img = image_entropy(img)
    policy = SiftPolicy(cfg.relax, cfg.invert)
    candidates: dict[int, list[TileRecord]] = {}
    results: dict[int, SiftResult] = {}
    for scale in image_scales(img, cfg):
        grid = generate_grid(img, scale)
        records = grid_records(img, grid)
        entropies = grid_entropy_matrix(img, grid.xs, grid.ys, scale.tile_w, scale.tile_h, backend).ravel()
        for rec, e in zip(records, entropies.tolist()):
            rec.entropy = e
        res = sift(records, h_img, policy)
        if not records:
            res = SiftResult(img.image_id, scale.scale_id, 0, 0, res.threshold_bits)
        candidates[scale.scale_id] = records
        results[scale.scale_id] = res
    return SiftedImage(img.image_id, h_img, candidates, results)


def tile_seed(seed: int, image_id: str, scale_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), zlib.crc32(image_id.encode("utf-8")), int(scale_id)])


def select_tiles(img: SourceImage, sifted: SiftedImage, cfg: PipelineConfig) -> dict[int, list[TileRecord]]:
    """Tiles that feed the classifier, per scale.

    ``entropy``: the retained tiles; when none pass, the single highest-entropy
    candidate stands in so every image can still be scored. ``random``: as many
    uniformly drawn tiles as the entropy criterion would keep. ``all``: every
    candidate.
    """
    chosen: dict[int, list[TileRecord]] = {}
    scales = {s.scale_id: s for s in image_scales(img, cfg)}
    for k, records in sifted.candidates.items():
        if not records:
            chosen[k] = []
            continue
        kept = [r for r in records if r.retained]
        if not kept:
            kept = [max(records, key=lambda r: (r.entropy, -r.tile_index))]
        if cfg.selection == "entropy":
            chosen[k] = kept
        elif cfg.selection == "all":
            chosen[k] = list(records)
        else:
            sample = random_tile_sample(img, scales[k], len(kept), tile_seed(cfg.seed, img.image_id, k))
            chosen[k] = sample
    return chosen


@dataclass
class TileBank:
    """Selected tiles of one image with cached baseline features."""

    image: SourceImage
    tiles: dict[int, list[TileRecord]]
    features: dict[int, np.ndarray] = field(default_factory=dict)
    sifted: SiftedImage | None = None

    @property
    def image_id(self) -> str:
        return self.image.image_id

    @property
    def label(self) -> int | None:
        return self.image.label

    def scale_features(self, k: int) -> np.ndarray:
        if k not in self.features:
            self.features[k] = featurize_tiles(self.image, self.tiles.get(k, []))
        return self.features[k]

    def tile_count(self, k: int | None = None) -> int:
        if k is None:
            return sum(len(v) for v in self.tiles.values())
        return len(self.tiles.get(k, []))


def build_bank(img: SourceImage, cfg: PipelineConfig, backend: str | None = None) -> TileBank:
    sifted = tile_and_sift(img, cfg, backend)
    return TileBank(img, select_tiles(img, sifted, cfg), sifted=sifted)


def tile_probabilities(model, bank: TileBank, k: int) -> np.ndarray:
    if isinstance(model, BaselineModel):
        return model.predict_proba(bank.scale_features(k))
    return model.predict_tiles(bank.image, bank.tiles.get(k, []))


def probability_vectors(models: Mapping[int, object], bank: TileBank) -> list[ProbabilityVector]:
    """Per-scale probability vectors; scales without tiles are skipped."""
    pvs = []
    for k in sorted(models):
        if bank.tile_count(k):
            pvs.append(ProbabilityVector(bank.image_id, k, tile_probabilities(models[k], bank, k)))
    return pvs


def score_image(
    models: Mapping[int, object],
    bank: TileBank,
    method: str,
    weights: Mapping[int, float] | None,
    boundary: float,
) -> AggregationResult:
    pvs = probability_vectors(models, bank)
    if not pvs:
        raise ValueError(f"image {bank.image_id} has no tiles at any scale")
    if weights is not None:
        present = {pv.scale_id for pv in pvs}
        weights = _renormalize({k: w for k, w in weights.items() if k in present})
    return aggregate(pvs, method, weights, boundary)


def _renormalize(weights: dict[int, float]) -> dict[int, float]:
    total = sum(weights.values())
    if total <= 0:
        return {k: 1.0 / len(weights) for k in weights}
    return {k: w / total for k, w in weights.items()}


def scale_scores(models: Mapping[int, object], banks: Sequence[TileBank], method: str, boundary: float) -> np.ndarray:
    """``(K, N)`` matrix of per-scale image scores; missing scales score at the boundary."""
    keys = sorted(models)
    out = np.full((len(keys), len(banks)), boundary, dtype=np.float64)
    for j, bank in enumerate(banks):
        for i, k in enumerate(keys):
            if bank.tile_count(k):
                out[i, j] = image_score(tile_probabilities(models[k], bank, k), method, boundary)
    return out
