"""Entropy-sifted image tiling and tile-probability aggregation."""
from entropytile._accel import NUMBA_ENABLED
from entropytile.aggregator import (
    AggregationResult,
    ErrorReport,
    ProbabilityVector,
    aggregate,
    average_probability,
    classification_error,
    classify,
    combine_scales,
    majority_vote,
    mean_variance,
    optimize_weights,
    tile_variance,
)
from entropytile.config import PipelineConfig
from entropytile.entropy import Histogram256, histogram, image_entropy, shannon_entropy, tile_entropies
from entropytile.raster import ResolutionPolicy, ScreenVerdict, SourceImage, load_image, resample, screen_candidate
from entropytile.sifter import SiftPolicy, SiftResult, entropy_distribution, retention_rate, sift
from entropytile.tiler import (
    TileGrid,
    TileRecord,
    TileScale,
    extract_tile,
    generate_grid,
    random_tile_sample,
    rectangular_scale,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "AggregationResult",
    "ErrorReport",
    "Histogram256",
    "PipelineConfig",
    "ProbabilityVector",
    "ResolutionPolicy",
    "ScreenVerdict",
    "SiftPolicy",
    "SiftResult",
    "SourceImage",
    "TileGrid",
    "TileRecord",
    "TileScale",
    "aggregate",
    "average_probability",
    "classification_error",
    "classify",
    "combine_scales",
    "entropy_distribution",
    "extract_tile",
    "generate_grid",
    "histogram",
    "image_entropy",
    "load_image",
    "majority_vote",
    "mean_variance",
    "optimize_weights",
    "random_tile_sample",
    "rectangular_scale",
    "resample",
    "retention_rate",
    "screen_candidate",
    "shannon_entropy",
    "sift",
    "tile_entropies",
    "tile_variance",
]
