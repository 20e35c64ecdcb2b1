"""Image-level cross-validation, checkpoint selection and evaluation reports."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from entropytile.aggregator import AggregationResult, ErrorReport, classification_error, classify, image_score, optimize_weights
from entropytile.classifier import train_baseline
from entropytile.config import PipelineConfig
from entropytile.pipeline import TileBank, build_bank, scale_scores, score_image, tile_probabilities
from entropytile.raster import SourceImage

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FoldPlan:
    n_folds: int
    assignments: dict[str, int]
    seed: int

    def test_ids(self, fold: int) -> list[str]:
        return sorted(i for i, f in self.assignments.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        return sorted(i for i, f in self.assignments.items() if f != fold)

    def fold_sizes(self) -> list[int]:
        return [sum(1 for f in self.assignments.values() if f == k) for k in range(self.n_folds)]


def _id_label(item) -> tuple[str, int | None]:
    if isinstance(item, (SourceImage, TileBank)):
        return item.image_id, item.label
    image_id, label = item
    return str(image_id), label


def stratified_split(items: Sequence, n_folds: int, rng: np.random.Generator) -> dict[str, int]:
    by_class: dict[int, list[str]] = {}
    for item in items:
        image_id, label = _id_label(item)
        if label is None:
            raise ValueError(f"image {image_id} is unlabeled")
        by_class.setdefault(int(label), []).append(image_id)
    assignments: dict[str, int] = {}
    position = 0
    for label in sorted(by_class):
        ids = sorted(by_class[label])
        rng.shuffle(ids)
        # continue the round-robin across classes so total fold sizes also differ by at most one
        for image_id in ids:
            if image_id in assignments:
                raise ValueError(f"duplicate image id {image_id}")
            assignments[image_id] = position % n_folds
            position += 1
    return assignments


def plan_folds(images: Sequence, n_folds: int, seed: int = 0) -> FoldPlan:
    """Stratified image-level fold assignment.

    ``images`` holds :class:`SourceImage` objects or ``(image_id, label)``
    pairs. Every tile of an image inherits the image's fold.
    """
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2")
    counts: dict[int, int] = {}
    for item in images:
        _, label = _id_label(item)
        if label is not None:
            counts[int(label)] = counts.get(int(label), 0) + 1
    for label, n in sorted(counts.items()):
        if n < n_folds:
            raise ValueError(f"class {label} has {n} images, fewer than n_folds={n_folds}")
    assignments = stratified_split(images, n_folds, np.random.default_rng(seed))
    return FoldPlan(n_folds, assignments, seed)


def validation_split(banks: Sequence[TileBank], fraction: float, seed) -> tuple[list[TileBank], list[TileBank]]:
    """Hold out a stratified ``fraction`` of training images for model selection.

    Returns ``(fit, validation)``. With ``fraction == 0`` the fit images double
    as the validation set.
    """
    if fraction <= 0:
        return list(banks), list(banks)
    rng = np.random.default_rng(seed)
    fit, val = [], []
    for label in (0, 1):
        group = sorted((b for b in banks if b.label == label), key=lambda b: b.image_id)
        order = rng.permutation(len(group))
        n_val = min(max(1, int(round(fraction * len(group)))), len(group) - 1)
        for rank, idx in enumerate(order):
            (val if rank < n_val else fit).append(group[idx])
    fit.sort(key=lambda b: b.image_id)
    val.sort(key=lambda b: b.image_id)
    return fit, val


def image_accuracy(model, banks: Sequence[TileBank], scale_id: int, method: str = "average", boundary: float = 0.5) -> float:
    """Image-level accuracy of one tile model at one scale."""
    hits = total = 0
    for bank in banks:
        if not bank.tile_count(scale_id):
            continue
        score = image_score(tile_probabilities(model, bank, scale_id), method, boundary)
        hits += classify(score, boundary) == bank.label
        total += 1
    return hits / total if total else 0.0


def best_index(accuracies: Sequence[float]) -> int:
    """argmax with ties going to the earliest entry."""
    if len(accuracies) == 0:
        raise ValueError("no checkpoints to choose from")
    return int(np.argmax(np.asarray(accuracies, dtype=np.float64)))


@dataclass(frozen=True)
class CheckpointChoice:
    version_id: str
    index: int
    accuracies: list[float]


def select_checkpoint(
    checkpoints: Sequence,
    banks: Sequence[TileBank],
    scale_id: int = 1,
    method: str = "average",
    boundary: float = 0.5,
) -> CheckpointChoice:
    """Pick the checkpoint with the best image-level validation accuracy.

    Tile-level accuracy is never consulted. Ties go to the earliest epoch.
    """
    if len(checkpoints) == 0:
        raise ValueError("no checkpoints to choose from")
    accs = [image_accuracy(m, banks, scale_id, method, boundary) for m in checkpoints]
    i = best_index(accs)
    return CheckpointChoice(checkpoints[i].version_id, i, accs)


def _training_matrix(banks: Sequence[TileBank], scale_id: int) -> tuple[np.ndarray, np.ndarray, list[tuple[str, int, int]]]:
    xs, ys, keys = [], [], []
    for bank in banks:
        feats = bank.scale_features(scale_id)
        if len(feats):
            xs.append(feats)
            ys.append(np.full(len(feats), bank.label, dtype=np.float64))
            keys.extend(r.key for r in bank.tiles[scale_id])
    if not xs:
        raise ValueError(f"no training tiles at scale {scale_id}")
    return np.vstack(xs), np.concatenate(ys), keys


@dataclass
class FoldResult:
    fold: int
    test_ids: list[str]
    train_ids: list[str]
    validation_ids: list[str]
    results: list[AggregationResult]
    error: ErrorReport
    checkpoints: dict[int, str]
    weights: dict[int, float]
    validation_curve: dict[int, list[float]] = field(default_factory=dict)
    test_curve: dict[int, list[float]] = field(default_factory=dict)
    train_tiles: dict[int, int] = field(default_factory=dict)
    test_tiles: dict[int, int] = field(default_factory=dict)
    train_tile_keys: set[tuple[str, int, int]] = field(default_factory=set)

    @property
    def accuracy(self) -> float:
        return self.error.accuracy

    @property
    def mean_variance(self) -> float:
        values = [v for r in self.results for v in r.scale_variances.values()]
        return float(np.mean(values)) if values else 0.0


def run_fold(
    banks: Mapping[str, TileBank],
    plan: FoldPlan,
    fold: int,
    cfg: PipelineConfig,
    external=None,
) -> FoldResult:
    """Train (or load), select, score and aggregate for one fold.

    With ``external`` (any object with ``predict_tiles``), no training happens
    and the external probabilities are used at every scale.
    """
    test = [banks[i] for i in plan.test_ids(fold)]
    train = [banks[i] for i in plan.train_ids(fold)]
    if not test:
        raise ValueError(f"fold {fold} is empty")
    for b in test + train:
        if b.label is None:
            raise ValueError(f"image {b.image_id} is unlabeled")
    scale_ids = list(range(1, len(cfg.tile_sizes) + 1))

    fit, val = validation_split(train, cfg.validation_fraction, [cfg.seed, fold, 7])
    test_ids = {b.image_id for b in test}
    models: dict[int, object] = {}
    chosen: dict[int, str] = {}
    val_curve: dict[int, list[float]] = {}
    test_curve: dict[int, list[float]] = {}
    train_tiles: dict[int, int] = {}
    train_keys: set[tuple[str, int, int]] = set()

    for k in scale_ids:
        if external is not None:
            models[k] = external
            chosen[k] = getattr(external, "version_id", "external")
            continue
        if len({b.label for b in fit}) < 2:
            raise ValueError(f"fold {fold}: training images cover a single class")
        X, y, keys = _training_matrix(fit, k)
        leaked = {key[0] for key in keys} & test_ids
        if leaked:
            raise AssertionError(f"fold {fold}: test images in training set: {sorted(leaked)}")
        train_keys.update(keys)
        train_tiles[k] = len(keys)
        run = train_baseline(X, y, cfg.epochs, cfg.learning_rate, seed=cfg.seed)
        checkpoints = run.checkpoints or [run.model]
        choice = select_checkpoint(checkpoints, val, k, cfg.method, cfg.boundary)
        models[k] = checkpoints[choice.index]
        chosen[k] = choice.version_id
        val_curve[k] = choice.accuracies
        test_curve[k] = [image_accuracy(m, test, k, cfg.method, cfg.boundary) for m in checkpoints]

    if cfg.weights is not None:
        weights = dict(zip(scale_ids, cfg.weights))
    elif len(scale_ids) == 1:
        weights = {scale_ids[0]: 1.0}
    else:
        val_scores = scale_scores(models, val, cfg.method, cfg.boundary)
        w = optimize_weights(val_scores, [b.label for b in val], boundary=cfg.boundary)
        weights = dict(zip(scale_ids, w.tolist()))

    results = [score_image(models, b, cfg.method, weights, cfg.boundary) for b in test]
    error = classification_error(
        [(b.label, r.final_score) for b, r in zip(test, results)],
        [b.image_id for b in test],
        cfg.boundary,
    )
    log.info("fold %d: accuracy %.3f on %d images (checkpoints %s)", fold, error.accuracy, len(test), chosen)
    return FoldResult(
        fold=fold,
        test_ids=[b.image_id for b in test],
        train_ids=[b.image_id for b in fit],
        validation_ids=[b.image_id for b in val],
        results=results,
        error=error,
        checkpoints=chosen,
        weights=weights,
        validation_curve=val_curve,
        test_curve=test_curve,
        train_tiles=train_tiles,
        test_tiles={k: sum(b.tile_count(k) for b in test) for k in scale_ids},
        train_tile_keys=train_keys,
    )


@dataclass
class EvalReport:
    folds: list[FoldResult]
    tile_sizes: list[int]
    tiles_per_image: dict[int, float]

    @property
    def accuracies(self) -> list[float]:
        return [f.accuracy for f in self.folds]

    @property
    def accuracy_range(self) -> tuple[float, float]:
        accs = self.accuracies
        return min(accs), max(accs)

    @property
    def overall_accuracy(self) -> float:
        """Pooled accuracy over every test image of every fold."""
        hits = sum(f.error.total - f.error.n for f in self.folds)
        return hits / sum(f.error.total for f in self.folds)

    @property
    def mean_variance(self) -> float:
        return float(np.mean([f.mean_variance for f in self.folds]))

    def tiles_per_fold(self, scale_id: int) -> float:
        counts = [f.train_tiles.get(scale_id, 0) for f in self.folds]
        return float(np.mean(counts)) if counts else 0.0

    def csv_rows(self) -> list[dict]:
        rows = []
        for f in self.folds:
            rows.append({
                "fold": f.fold,
                "n_test": f.error.total,
                "accuracy": f.accuracy,
                "n_misclassified": f.error.n,
                "error_E": f.error.E,
                "mean_variance": f.mean_variance,
                "train_tiles": sum(f.train_tiles.values()),
                "test_tiles": sum(f.test_tiles.values()),
                "checkpoints": ";".join(f"{k}:{v}" for k, v in sorted(f.checkpoints.items())),
                "weights": ";".join(f"{k}:{w:.2f}" for k, w in sorted(f.weights.items())),
            })
        return rows

    def summary(self) -> str:
        lo, hi = self.accuracy_range
        lines = [
            f"folds: {len(self.folds)}",
            f"{'tile size':>10}  {'avg tiles/image':>15}  {'tiles/fold':>10}",
        ]
        for k, size in enumerate(self.tile_sizes, start=1):
            lines.append(f"{size:>10}  {self.tiles_per_image.get(k, 0.0):>15.1f}  {self.tiles_per_fold(k):>10.0f}")
        lines += [
            f"cross-validation range: {lo:.2f}-{hi:.2f}",
            f"pooled accuracy: {self.overall_accuracy:.4f}",
            f"mean tile variance: {self.mean_variance:.4f}",
            "chosen checkpoints: " + ", ".join(
                f"fold {f.fold}: " + "/".join(v for _, v in sorted(f.checkpoints.items())) for f in self.folds
            ),
        ]
        return "\n".join(lines) + "\n"


def build_banks(images: Sequence[SourceImage], cfg: PipelineConfig, backend: str | None = None) -> dict[str, TileBank]:
    banks = {}
    for img in images:
        if img.image_id in banks:
            raise ValueError(f"duplicate image id {img.image_id}")
        banks[img.image_id] = build_bank(img, cfg, backend)
    return banks


def cross_validate(
    images: Sequence[SourceImage],
    cfg: PipelineConfig,
    external=None,
    backend: str | None = None,
    banks: Mapping[str, TileBank] | None = None,
) -> EvalReport:
    for img in images:
        if img.label is None:
            raise ValueError(f"image {img.image_id} is unlabeled; evaluation needs labels")
    plan = plan_folds(images, cfg.n_folds, cfg.seed)
    if banks is None:
        banks = build_banks(images, cfg, backend)
    folds = [run_fold(banks, plan, f, cfg, external) for f in range(cfg.n_folds)]
    per_image = {
        k: float(np.mean([banks[img.image_id].tile_count(k) for img in images]))
        for k in range(1, len(cfg.tile_sizes) + 1)
    }
    return EvalReport(folds, list(cfg.tile_sizes), per_image)
