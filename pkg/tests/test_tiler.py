import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from entropytile.tiler import (
    TileRecord,
    TileScale,
    axis_origins,
    extract_tile,
    generate_grid,
    grid_records,
    random_tile_sample,
    rectangular_scale,
    stride_for,
)

from conftest import make_image
from oracles import brute_origins


def test_nine_tiles_half_overlap():
    img = make_image(np.zeros((200, 200)))
    grid = generate_grid(img, TileScale(1, 100, 100, 0.5))
    assert grid.scale.stride_x == 50
    assert grid.xs.tolist() == [0, 50, 100] and grid.count == 9


def test_ninety_two_percent_overlap():
    img = make_image(np.zeros((200, 200)))
    grid = generate_grid(img, TileScale(1, 100, 100, 0.92))
    assert stride_for(100, 0.92) == 8
    assert grid.xs.tolist() == list(range(0, 97, 8)) + [100]
    assert grid.count == 196


def test_tile_larger_than_image():
    assert generate_grid(make_image(np.zeros((90, 90))), TileScale(1, 100, 100, 0.5)).count == 0


def test_row_major_indexing():
    img = make_image(np.zeros((100, 150)))
    recs = grid_records(img, generate_grid(img, TileScale(2, 50, 50, 0.0)))
    assert [(r.x, r.y) for r in recs] == [(0, 0), (50, 0), (100, 0), (0, 50), (50, 50), (100, 50)]
    assert [r.tile_index for r in recs] == list(range(6))
    assert all(r.scale_id == 2 for r in recs)


@settings(max_examples=300, deadline=None)
@given(
    w=st.integers(1, 400),
    h=st.integers(1, 400),
    tw=st.integers(1, 200),
    th=st.integers(1, 200),
    overlap=st.floats(0.0, 0.99),
)
def test_grid_matches_brute_force(w, h, tw, th, overlap):
    grid = generate_grid(make_image(np.zeros((h, w))), TileScale(1, tw, th, overlap))
    xs, ys = brute_origins(w, tw, overlap), brute_origins(h, th, overlap)
    if not xs or not ys:
        assert grid.count == 0
    else:
        assert grid.origins == [(x, y) for y in ys for x in xs]


def test_axis_origins_exact_fit():
    assert axis_origins(100, 100, 50).tolist() == [0]
    assert axis_origins(99, 100, 50).tolist() == []


@pytest.mark.parametrize(
    "shape, tile",
    [((500, 500), (150, 150)), ((1000, 2000), (212, 106)), ((2000, 1000), (106, 212))],
)
def test_rectangular_scale(shape, tile):
    s = rectangular_scale(make_image(np.zeros(shape)), 150, 0.5)
    assert (s.tile_w, s.tile_h) == tile


def test_bad_scale():
    with pytest.raises(ValueError):
        TileScale(1, 0, 10)
    with pytest.raises(ValueError):
        TileScale(1, 10, 10, overlap=1.0)


def test_extract_whole_and_single(rng):
    img = make_image(rng.integers(0, 256, size=(20, 30)))
    whole = extract_tile(img, TileRecord("img", 1, 0, 0, 0, 30, 20))
    np.testing.assert_array_equal(whole, img.pixels)
    px = extract_tile(img, TileRecord("img", 1, 0, 3, 5, 1, 1))
    assert px.tolist() == [[img.pixels[5, 3]]]


def test_adjacent_tiles_share_half(rng):
    img = make_image(rng.integers(0, 256, size=(100, 200)))
    a, b = grid_records(img, generate_grid(img, TileScale(1, 100, 100, 0.5)))[:2]
    np.testing.assert_array_equal(extract_tile(img, a)[:, 50:], extract_tile(img, b)[:, :50])


def test_extract_out_of_bounds():
    img = make_image(np.zeros((10, 10)))
    with pytest.raises(ValueError):
        extract_tile(img, TileRecord("img", 1, 0, 5, 5, 6, 2))


def test_random_sample_deterministic_and_bounded():
    img = make_image(np.zeros((200, 200)))
    scale = TileScale(1, 100, 100)
    a = random_tile_sample(img, scale, 1000, seed=7)
    assert a == random_tile_sample(img, scale, 1000, seed=7)
    assert all(0 <= r.x <= 100 and 0 <= r.y <= 100 for r in a)
    assert a != random_tile_sample(img, scale, 1000, seed=8)


def test_random_sample_uniform():
    img = make_image(np.zeros((200, 200)))
    recs = random_tile_sample(img, TileScale(1, 100, 100), 100_000, seed=2024)
    for axis in ("x", "y"):
        counts = np.bincount([getattr(r, axis) for r in recs], minlength=101)
        assert chisquare(counts).pvalue > 0.01


def test_random_sample_errors():
    with pytest.raises(ValueError):
        random_tile_sample(make_image(np.zeros((50, 50))), TileScale(1, 100, 100), 5, 0)
    with pytest.raises(ValueError):
        random_tile_sample(make_image(np.zeros((200, 200))), TileScale(1, 100, 100), 0, 0)
