"""Compare tile-entropy backends: numba sliding histogram, numpy integral histogram, naive recomputation.

    python3 benchmarks/bench_entropy.py                 # 2150x2700 image, 450 px tiles, 92% overlap
    python3 benchmarks/bench_entropy.py --tile 100 --overlap 0.5 --repeat 5

The naive path recomputes a 256-bin histogram for every tile and is timed on
a sample of tiles, then extrapolated to the full grid.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from entropytile._accel import NUMBA_ENABLED
from entropytile.entropy import entropy_from_counts, grid_entropy_matrix
from entropytile.raster import SourceImage
from entropytile.tiler import TileScale, generate_grid


def naive(img: SourceImage, origins, w: int, h: int) -> np.ndarray:
    out = np.empty(len(origins))
    for i, (x, y) in enumerate(origins):
        out[i] = entropy_from_counts(np.bincount(img.pixels[y : y + h, x : x + w].ravel(), minlength=256))
    return out


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--width", type=int, default=2150)
    ap.add_argument("--height", type=int, default=2700)
    ap.add_argument("--tile", type=int, default=450)
    ap.add_argument("--overlap", type=float, default=0.92)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--naive-sample", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    img = SourceImage("bench", rng.integers(0, 256, size=(args.height, args.width), dtype=np.uint8), 25.0)
    grid = generate_grid(img, TileScale(1, args.tile, args.tile, args.overlap))
    print(f"image {args.width}x{args.height}, tile {args.tile}, overlap {args.overlap}: {grid.count} tiles")

    results = {}
    backends = ["numpy"] + (["numba"] if NUMBA_ENABLED else [])
    for b in backends:
        run = lambda b=b: grid_entropy_matrix(img, grid.xs, grid.ys, args.tile, args.tile, backend=b)
        run()  # warm-up (JIT compile for numba)
        results[b] = (best_of(run, args.repeat), run().ravel())

    sample_idx = rng.choice(grid.count, size=min(args.naive_sample, grid.count), replace=False)
    origins = grid.origins
    sample = [origins[i] for i in sample_idx]
    t_sample = best_of(lambda: naive(img, sample, args.tile, args.tile), 1)
    ref = naive(img, sample, args.tile, args.tile)
    results["naive (extrapolated)"] = (t_sample * grid.count / len(sample), None)

    print(f"{'backend':<22}{'seconds':>10}{'tiles/s':>14}{'max |diff|':>14}")
    for name, (secs, values) in results.items():
        diff = "" if values is None else f"{np.abs(values[sample_idx] - ref).max():.1e}"
        print(f"{name:<22}{secs:>10.3f}{grid.count / secs:>14.0f}{diff:>14}")


if __name__ == "__main__":
    main()
