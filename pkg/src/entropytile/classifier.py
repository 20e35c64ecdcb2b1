"""Per-tile classifiers.

Two kinds share the ``predict_tiles(img, records)`` interface:

* :class:`BaselineModel`, a logistic regression on 35 histogram features,
  trained by full-batch gradient descent with one checkpoint per epoch.
* :class:`ExternalModel`, which reads probabilities produced elsewhere (for
  example by a CNN) from a CSV keyed by ``image_id,scale_id,tile_index``.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from entropytile.entropy import N_LEVELS, entropy_from_counts
from entropytile.raster import SourceImage
from entropytile.tiler import TileRecord, extract_tile

N_HIST_BINS = 32
N_FEATURES = N_HIST_BINS + 3
PROB_HEADER = ["image_id", "scale_id", "tile_index", "prob"]


def featurize(tile: np.ndarray) -> np.ndarray:
    """35 features: 32-bin normalized histogram, mean/255, 2*std/255, entropy/8.

    The standard deviation of 8-bit data is at most 127.5, so doubling it
    keeps every feature in [0, 1].
    """
    tile = np.asarray(tile)
    if tile.size == 0:
        raise ValueError("cannot featurize an empty tile")
    if tile.dtype != np.uint8:
        raise TypeError(f"expected uint8 tile, got {tile.dtype}")
    flat = tile.ravel()
    counts = np.bincount(flat, minlength=N_LEVELS)
    coarse = counts.reshape(N_HIST_BINS, -1).sum(axis=1) / flat.size
    values = flat.astype(np.float64)
    out = np.empty(N_FEATURES)
    out[:N_HIST_BINS] = coarse
    out[N_HIST_BINS] = values.mean() / 255.0
    out[N_HIST_BINS + 1] = 2.0 * values.std() / 255.0
    out[N_HIST_BINS + 2] = entropy_from_counts(counts) / 8.0
    return out


def featurize_tiles(img: SourceImage, records: Sequence[TileRecord]) -> np.ndarray:
    if not records:
        return np.empty((0, N_FEATURES))
    return np.stack([featurize(extract_tile(img, r)) for r in records])


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy of ``sigmoid(X @ w + b)`` against ``y``."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    residual = sigmoid(X @ w + b) - y
    return X.T @ residual / len(y), float(residual.mean())


class TileClassifier(Protocol):
    version_id: str

    def predict_tiles(self, img: SourceImage, records: Sequence[TileRecord]) -> np.ndarray: ...


@dataclass
class BaselineModel:
    weights: np.ndarray
    bias: float = 0.0
    version_id: str = "epoch-000"
    seed: int | None = None
    epoch: int = 0
    kind: str = field(default="baseline-logistic", init=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64).copy()

    @classmethod
    def zeros(cls, n_features: int = N_FEATURES, seed: int | None = None) -> BaselineModel:
        return cls(np.zeros(n_features), 0.0, "epoch-000", seed, 0)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return sigmoid(np.asarray(features, dtype=np.float64) @ self.weights + self.bias)

    def predict_tiles(self, img: SourceImage, records: Sequence[TileRecord]) -> np.ndarray:
        return self.predict_proba(featurize_tiles(img, records))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "version_id": self.version_id,
            "epoch": self.epoch,
            "seed": self.seed,
            "bias": float(self.bias),
            "weights": [float(v) for v in self.weights],
        }

    @classmethod
    def from_dict(cls, data: dict) -> BaselineModel:
        if data.get("kind", "baseline-logistic") != "baseline-logistic":
            raise ValueError(f"not a baseline checkpoint: kind={data.get('kind')!r}")
        return cls(np.array(data["weights"], dtype=np.float64), float(data["bias"]), data["version_id"],
                   data.get("seed"), int(data.get("epoch", 0)))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> BaselineModel:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class TrainingRun:
    model: BaselineModel
    checkpoints: list[BaselineModel]
    losses: list[float]


def train_baseline(
    X: np.ndarray,
    y: Sequence[int],
    epochs: int,
    learning_rate: float,
    seed: int = 0,
    init_scale: float = 0.0,
) -> TrainingRun:
    """Fit logistic regression by full-batch gradient descent.

    Weights start at zero unless ``init_scale > 0``, in which case they are
    drawn from ``N(0, init_scale^2)`` using ``seed``. ``losses[e]`` is the loss
    of the model after ``e`` epochs, so ``losses[0]`` is the initial loss.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"feature matrix {X.shape} does not match {y.size} labels")
    if not learning_rate > 0:
        raise ValueError("learning_rate must be positive")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    classes = set(np.unique(y).tolist())
    if classes != {0.0, 1.0}:
        raise ValueError(f"training needs examples of both classes 0 and 1, got {sorted(classes)}")

    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, init_scale, X.shape[1]) if init_scale > 0 else np.zeros(X.shape[1])
    b = 0.0
    losses = [logistic_loss(w, b, X, y)]
    checkpoints = []
    for epoch in range(1, epochs + 1):
        gw, gb = logistic_gradient(w, b, X, y)
        w = w - learning_rate * gw
        b = b - learning_rate * gb
        losses.append(logistic_loss(w, b, X, y))
        checkpoints.append(BaselineModel(w, b, f"epoch-{epoch:03d}", seed, epoch))
    final = checkpoints[-1] if checkpoints else BaselineModel(w, b, "epoch-000", seed, 0)
    return TrainingRun(final, checkpoints, losses)


class MissingProbabilityError(KeyError):
    def __str__(self) -> str:
        image_id, scale_id, tile_index = self.args[0]
        return f"no probability for image_id={image_id} scale_id={scale_id} tile_index={tile_index}"


@dataclass
class ExternalModel:
    probabilities: dict[tuple[str, int, int], float]
    version_id: str = "external"
    kind: str = field(default="external", init=False)

    def prob(self, image_id: str, scale_id: int, tile_index: int) -> float:
        key = (image_id, int(scale_id), int(tile_index))
        try:
            return self.probabilities[key]
        except KeyError:
            raise MissingProbabilityError(key) from None

    def predict_tiles(self, img: SourceImage | None, records: Sequence[TileRecord]) -> np.ndarray:
        return np.array([self.prob(*r.key) for r in records], dtype=np.float64)

    @classmethod
    def from_csv(cls, path: str | os.PathLike, version_id: str | None = None) -> ExternalModel:
        return cls(read_probabilities(path), version_id or os.path.basename(os.fspath(path)))


def write_probabilities(path: str | os.PathLike, rows: Iterable[tuple[str, int, int, float]]) -> None:
    """Write a probability CSV; floats use ``repr`` so they read back bit-identically."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROB_HEADER)
        for image_id, scale_id, tile_index, prob in sorted(rows, key=lambda r: (r[0], r[1], r[2])):
            writer.writerow([image_id, int(scale_id), int(tile_index), repr(float(prob))])


def read_probabilities(path: str | os.PathLike) -> dict[tuple[str, int, int], float]:
    probs: dict[tuple[str, int, int], float] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PROB_HEADER:
            raise ValueError(f"{path}: expected header {','.join(PROB_HEADER)}, got {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            key = (row["image_id"], int(row["scale_id"]), int(row["tile_index"]))
            p = float(row["prob"])
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{path}:{lineno}: probability {p} outside [0, 1]")
            if key in probs:
                raise ValueError(f"{path}:{lineno}: duplicate row for {key}")
            probs[key] = p
    return probs
