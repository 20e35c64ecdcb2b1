import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entropytile.entropy import image_entropy, tile_entropies
from entropytile.sifter import SiftPolicy, entropy_distribution, retention_rate, sift, SiftResult
from entropytile.tiler import TileRecord, TileScale, generate_grid, grid_records

from conftest import make_image


def recs(entropies):
    return [TileRecord("a", 1, i, 0, 0, 1, 1, entropy=e) for i, e in enumerate(entropies)]


def test_strict_sift():
    tiles = recs([7.5, 6.0])
    res = sift(tiles, 7.0)
    assert [t.retained for t in tiles] == [True, False]
    assert (res.retained_count, res.candidate_count, res.threshold_bits) == (1, 2, 7.0)


def test_relaxed_sift():
    tiles = recs([7.5, 6.0])
    res = sift(tiles, 7.0, SiftPolicy(0.99))
    assert res.threshold_bits == pytest.approx(6.93)
    assert [t.retained for t in tiles] == [True, False]


def test_boundary_retained():
    tiles = recs([7.0, 6.999999])
    sift(tiles, 7.0)
    assert [t.retained for t in tiles] == [True, False]


def test_invert_is_complement():
    a, b = recs([1, 2, 3, 4]), recs([1, 2, 3, 4])
    sift(a, 2.5)
    sift(b, 2.5, SiftPolicy(invert=True))
    assert [x.retained for x in a] == [not y.retained for y in b]


def test_missing_entropy():
    with pytest.raises(ValueError):
        sift([TileRecord("a", 1, 0, 0, 0, 1, 1)], 1.0)


def test_bad_relax():
    for r in (0.0, 1.5):
        with pytest.raises(ValueError):
            SiftPolicy(r)


def test_retention_rate():
    assert retention_rate(SiftResult("a", 1, 30, 200, 1.0)) == 0.15
    with pytest.raises(ValueError):
        retention_rate(SiftResult(None, None, 0, 0, 0.0))


def test_constant_image_retains_all(backend):
    img = make_image(np.full((200, 200), 9))
    grid = generate_grid(img, TileScale(1, 100, 100))
    tiles = grid_records(img, grid)
    for rec, (_, e) in zip(tiles, tile_entropies(img, grid, backend=backend)):
        rec.entropy = e
    assert retention_rate(sift(tiles, image_entropy(img))) == 1.0


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0, 8), min_size=1, max_size=50),
    st.floats(0, 8),
    st.floats(0.01, 1.0),
    st.floats(0.01, 1.0),
)
def test_relax_monotone(entropies, h, a, b):
    a, b = min(a, b), max(a, b)
    ta, tb = recs(entropies), recs(entropies)
    ra, rb = sift(ta, h, SiftPolicy(a)), sift(tb, h, SiftPolicy(b))
    assert all(x.retained for x, y in zip(ta, tb) if y.retained)
    assert retention_rate(ra) >= retention_rate(rb)


def test_distribution_all_zero():
    d = entropy_distribution([0.0] * 5)
    assert d.occupied() == {0.0: 5}
    assert len(d.counts) == 160


def test_distribution_unit_bins():
    d = entropy_distribution(recs([1.0, 1.0, 3.0]), bin_width=1.0, image_entropy=2.0)
    assert d.occupied() == {1.0: 2, 3.0: 1}
    assert d.image_entropy == 2.0
    assert list(d.rows())[-1] == (7.0, 8.0, 0)


def test_distribution_eight_lands_in_last_bin():
    assert entropy_distribution([8.0]).counts[-1] == 1


@settings(max_examples=50)
@given(st.lists(st.floats(0, 8), min_size=1, max_size=200))
def test_distribution_mean_and_total(values):
    d = entropy_distribution(values)
    assert abs(d.mean - sum(values) / len(values)) <= 1e-9
    assert d.counts.sum() == len(values)


def test_distribution_errors():
    with pytest.raises(ValueError):
        entropy_distribution([])
    with pytest.raises(ValueError):
        entropy_distribution([1.0], bin_width=0)
