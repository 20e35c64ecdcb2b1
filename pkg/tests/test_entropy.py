import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from entropytile.entropy import (
    Histogram256,
    grid_entropy_matrix,
    histogram,
    image_entropy,
    shannon_entropy,
    tile_entropies,
)
from entropytile.tiler import TileScale, generate_grid

from conftest import make_image
from oracles import naive_entropy


def test_histogram_constant():
    h = histogram(np.full((2, 2), 7, dtype=np.uint8))
    assert h.counts[7] == 4 and h.total == 4
    assert h.counts.sum() == h.counts[7]


def test_histogram_two_values():
    h = histogram(np.array([[0, 255], [0, 255]], dtype=np.uint8))
    assert (h.counts[0], h.counts[255], h.total) == (2, 2, 4)


def test_histogram_additive(rng):
    img = make_image(rng.integers(0, 256, size=(40, 60)))
    left = histogram(img, 0, 0, 25, 40)
    right = histogram(img, 25, 0, 35, 40)
    assert left + right == histogram(img)


@pytest.mark.parametrize("region", [(0, 0, 0, 5), (0, 0, 5, 0), (-1, 0, 2, 2), (9, 9, 2, 2)])
def test_histogram_bad_region(region):
    with pytest.raises(ValueError):
        histogram(np.zeros((10, 10), dtype=np.uint8), *region)


def test_entropy_single_bin():
    counts = np.zeros(256, dtype=np.int64)
    counts[42] = 1000
    assert shannon_entropy(Histogram256(counts)) == 0.0


def test_entropy_two_equal_bins():
    counts = np.zeros(256, dtype=np.int64)
    counts[[3, 200]] = 17
    assert shannon_entropy(Histogram256(counts)) == pytest.approx(1.0, abs=1e-12)


def test_entropy_uniform_256():
    assert shannon_entropy(Histogram256(np.full(256, 9))) == pytest.approx(8.0, abs=1e-12)


def test_entropy_of_empty_histogram_errors():
    with pytest.raises(ValueError):
        shannon_entropy(Histogram256(np.zeros(256)))


def test_image_entropy_examples(rng):
    assert image_entropy(make_image(np.full((30, 30), 128))) == 0.0
    checker = (np.indices((64, 64)).sum(axis=0) % 2) * 255
    assert image_entropy(make_image(checker)) == pytest.approx(1.0, abs=1e-12)
    noise = make_image(rng.integers(0, 256, size=(512, 512)))
    assert abs(image_entropy(noise) - 8.0) < 0.01


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 30), st.integers(1, 30))))
def test_entropy_bounds_and_oracle(pixels):
    h = image_entropy(pixels)
    assert 0.0 <= h <= 8.0 + 1e-12
    assert h == pytest.approx(naive_entropy(pixels), abs=1e-12)
    assert (h == 0.0) == (np.unique(pixels).size == 1)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20))), st.randoms())
def test_entropy_permutation_and_shape_invariant(pixels, rnd):
    flat = pixels.ravel().tolist()
    rnd.shuffle(flat)
    shuffled = np.array(flat, dtype=np.uint8).reshape(pixels.shape)
    assert image_entropy(shuffled) == pytest.approx(image_entropy(pixels), abs=1e-12)
    assert image_entropy(pixels.reshape(1, -1)) == pytest.approx(image_entropy(pixels), abs=1e-12)


def test_tile_entropies_constant_image(backend):
    img = make_image(np.full((120, 90), 33))
    grid = generate_grid(img, TileScale(1, 30, 20, 0.5))
    assert all(e == 0.0 for _, e in tile_entropies(img, grid, backend=backend))


def test_tile_entropies_match_naive_300(noise_image, backend):
    grid = generate_grid(noise_image, TileScale(1, 100, 100, 0.5))
    got = tile_entropies(noise_image, grid, backend=backend)
    assert [i for i, _ in got] == list(range(grid.count))
    for (i, e), (x, y) in zip(got, grid.origins):
        assert abs(e - naive_entropy(noise_image.pixels[y : y + 100, x : x + 100])) <= 1e-12


def test_single_tile_equals_image_entropy(rng, backend):
    img = make_image(rng.integers(0, 40, size=(37, 53)))
    grid = generate_grid(img, TileScale(1, 53, 37, 0.0))
    assert grid.count == 1
    ((_, e),) = tile_entropies(img, grid, backend=backend)
    assert e == pytest.approx(image_entropy(img), abs=1e-12)


def test_backends_agree_on_structured_image(rng):
    from conftest import BACKENDS

    if len(BACKENDS) < 2:
        pytest.skip("numba unavailable")
    base = rng.integers(0, 8, size=(211, 167)) * 30
    img = make_image(base)
    mats = [grid_entropy_matrix(img, *_axes(img, 31, 23, 0.8), 31, 23, backend=b) for b in BACKENDS]
    np.testing.assert_allclose(mats[0], mats[1], rtol=0, atol=1e-12)


def _axes(img, w, h, overlap):
    g = generate_grid(img, TileScale(1, w, h, overlap))
    return g.xs, g.ys


@settings(max_examples=40, deadline=None)
@given(
    h=st.integers(5, 60),
    w=st.integers(5, 60),
    tw=st.integers(1, 30),
    th=st.integers(1, 30),
    overlap=st.floats(0.0, 0.95),
    levels=st.integers(1, 256),
    seed=st.integers(0, 2**32 - 1),
)
def test_sliding_matches_naive_property(h, w, tw, th, overlap, levels, seed):
    from conftest import BACKENDS

    rng = np.random.default_rng(seed)
    img = make_image(rng.integers(0, levels, size=(h, w)))
    grid = generate_grid(img, TileScale(1, tw, th, overlap))
    for b in BACKENDS:
        for (i, e), (x, y) in zip(tile_entropies(img, grid, backend=b), grid.origins):
            assert abs(e - naive_entropy(img.pixels[y : y + th, x : x + tw])) <= 1e-12


def test_empty_grid(backend):
    img = make_image(np.zeros((10, 10)))
    grid = generate_grid(img, TileScale(1, 20, 20, 0.5))
    assert tile_entropies(img, grid, backend=backend) == []


def test_grid_validation():
    img = np.zeros((10, 10), dtype=np.uint8)
    with pytest.raises(ValueError):
        grid_entropy_matrix(img, [0, 8], [0], 5, 5)
    with pytest.raises(ValueError):
        grid_entropy_matrix(img, [3, 1], [0], 2, 2)


def test_unknown_backend():
    with pytest.raises(ValueError):
        grid_entropy_matrix(np.zeros((4, 4), dtype=np.uint8), [0], [0], 2, 2, backend="cuda")
