"""Pipeline configuration and its flat ``key = value`` file form."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields

SELECTIONS = ("entropy", "random", "all")


@dataclass
class PipelineConfig:
    target_resolution: float = 25.0
    max_downscale_ratio: float = 5.0
    tile_sizes: list[int] = field(default_factory=lambda: [100])
    overlap: float = 0.5
    rectangular: bool = False
    relax: float = 1.0
    invert: bool = False
    selection: str = "entropy"
    method: str = "average"
    boundary: float = 0.5
    weights: list[float] | None = None
    seed: int = 0
    n_folds: int = 4
    epochs: int = 30
    learning_rate: float = 10.0
    validation_fraction: float = 0.25
    bin_width: float = 0.05
    image_manifest: str = ""
    out_dir: str = "out"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.target_resolution > 0:
            raise ValueError("target_resolution must be positive")
        if not self.max_downscale_ratio >= 1:
            raise ValueError("max_downscale_ratio must be >= 1")
        if not self.tile_sizes or any(int(t) < 1 for t in self.tile_sizes):
            raise ValueError(f"tile_sizes must be a nonempty list of positive ints, got {self.tile_sizes}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must be in [0, 1)")
        if not 0.0 < self.relax <= 1.0:
            raise ValueError("relax must be in (0, 1]")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")
        if self.method not in ("average", "majority"):
            raise ValueError("method must be 'average' or 'majority'")
        if not 0.0 < self.boundary < 1.0:
            raise ValueError("boundary must be in (0, 1)")
        if self.weights is not None:
            if len(self.weights) != len(self.tile_sizes):
                raise ValueError(f"{len(self.weights)} weights for {len(self.tile_sizes)} tile sizes")
            if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
                raise ValueError("weights must be nonnegative and sum to 1")
        if self.n_folds < 2:
            raise ValueError("n_folds must be >= 2")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")

    def replace(self, **changes) -> PipelineConfig:
        return dataclasses.replace(self, **changes)

    # -- file form ---------------------------------------------------------

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> PipelineConfig:
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _parse(key, value)
        return cls(**values)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path: str | os.PathLike) -> PipelineConfig:
        with open(path) as fh:
            return cls.loads(fh.read())


_FLOATS = {"target_resolution", "max_downscale_ratio", "overlap", "relax", "boundary", "learning_rate",
           "validation_fraction", "bin_width"}
_INTS = {"seed", "n_folds", "epochs"}
_BOOLS = {"rectangular", "invert"}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(key: str, value: str):
    if key in _FLOATS:
        return float(value)
    if key in _INTS:
        return int(value)
    if key in _BOOLS:
        low = value.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"{key}: expected a boolean, got {value!r}")
        return low in ("true", "1", "yes")
    if key == "tile_sizes":
        return [int(v) for v in value.split(",") if v.strip()]
    if key == "weights":
        return [float(v) for v in value.split(",") if v.strip()] or None
    return value
