import numpy as np
import pytest
from hypothesis import given, strategies as st

from entropytile.aggregator import (
    ProbabilityVector,
    aggregate,
    average_probability,
    classification_error,
    classify,
    combine_scales,
    majority_vote,
    mean_variance,
    optimize_weights,
    simplex_grid,
    tile_variance,
)

from oracles import weight_oracle

probs = st.lists(st.floats(0, 1), min_size=1, max_size=40)


def test_average_examples():
    assert average_probability([0.9, 0.8, 0.1]) == pytest.approx(0.6, abs=1e-15)
    assert average_probability([0.37]) == 0.37
    assert average_probability([0.5] * 7) == 0.5


def test_majority_examples():
    assert majority_vote([0.9, 0.8, 0.1]) == pytest.approx(2 / 3)
    assert classify(majority_vote([0.9, 0.8, 0.1])) == 1
    assert majority_vote([0.6, 0.4]) == 0.5
    assert classify(majority_vote([0.6, 0.4])) == 1


def test_majority_and_average_disagree_on_margin():
    p = [0.49, 0.49, 0.51]
    assert majority_vote(p) == pytest.approx(1 / 3)
    assert average_probability(p) == pytest.approx(0.49666666, abs=1e-6)
    assert classify(majority_vote(p)) == classify(average_probability(p)) == 0


def test_boundary_tie_attributed():
    assert classify(0.5) == 1
    assert classify(np.nextafter(0.5, 0)) == 0


def test_variance_examples():
    assert tile_variance([0.5, 0.5]) == 0.0
    assert tile_variance([0.0, 1.0]) == 0.25
    assert mean_variance([[0.5, 0.5], [0.0, 1.0]]) == 0.125


def test_empty_vector_errors():
    with pytest.raises(ValueError):
        average_probability([])
    with pytest.raises(ValueError):
        ProbabilityVector("a", 1, [1.2])


@given(probs)
def test_scores_in_unit_interval(p):
    for v in (average_probability(p), majority_vote(p)):
        assert 0.0 <= v <= 1.0
    assert 0.0 <= tile_variance(p) <= 0.25 + 1e-12


def test_error_examples():
    rep = classification_error([(0, 0.6), (0, 0.7), (1, 0.9)])
    assert rep.n == 2 and rep.E == pytest.approx(0.15, abs=1e-12)
    assert rep.accuracy == pytest.approx(1 / 3)
    perfect = classification_error([(1, 0.9), (0, 0.1)])
    assert (perfect.E, perfect.accuracy) == (0.0, 1.0)
    one = classification_error([(1, 0.45), (1, 0.8)], ["a", "b"])
    assert one.E == pytest.approx(0.05, abs=1e-12)
    assert one.misclassified == [("a", 0.45)]


def test_combine_examples():
    assert combine_scales([0.8, 0.4], [1.0, 0.0]) == 0.8
    assert combine_scales([0.8, 0.4], [0.5, 0.5]) == pytest.approx(0.6)
    assert combine_scales({1: 0.8, 2: 0.4}, {2: 0.5, 1: 0.5}) == pytest.approx(0.6)


@given(st.floats(0, 1), st.lists(st.floats(0, 1), min_size=1, max_size=5))
def test_combine_equal_scores(s, raw):
    total = sum(raw)
    if total == 0:
        return
    w = [r / total for r in raw]
    assert combine_scales([s] * len(w), w) == pytest.approx(s, abs=1e-12)


def test_combine_rejects_off_simplex():
    with pytest.raises(ValueError):
        combine_scales([0.1, 0.2], [0.7, 0.7])
    with pytest.raises(ValueError):
        combine_scales([0.1, 0.2], [1.0])
    with pytest.raises(ValueError):
        combine_scales({1: 0.1}, {2: 1.0})


def test_simplex_grid_order():
    g = simplex_grid(2, 2).tolist()
    assert g == [[2, 0], [1, 1], [0, 2]]
    assert len(simplex_grid(3, 100)) == 5151


def test_optimize_perfect_vs_anticorrelated():
    labels = [1, 1, 1, 0, 0, 0]
    good = [0.9, 0.8, 0.7, 0.2, 0.1, 0.3]
    bad = [1 - v for v in good]
    np.testing.assert_allclose(optimize_weights([good, bad], labels), [1.0, 0.0])
    np.testing.assert_allclose(optimize_weights([bad, good], labels), [0.0, 1.0])


def test_optimize_identical_scales_uniform():
    s = [0.7, 0.2, 0.6, 0.4]
    np.testing.assert_allclose(optimize_weights([s, s], [1, 0, 0, 1]), [0.5, 0.5])


def test_optimize_single_scale():
    assert optimize_weights([[0.3, 0.8]], [0, 1]).tolist() == [1.0]


@pytest.mark.parametrize("seed", range(12))
def test_optimize_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    k = 2 if seed < 8 else 3
    step = 0.01 if k == 2 else 0.05
    n = int(rng.integers(4, 12))
    labels = rng.integers(0, 2, size=n)
    scores = np.clip(rng.normal(0.5 + 0.15 * (2 * labels - 1), 0.2, size=(k, n)), 0, 1)
    got = optimize_weights(scores, labels, grid_step=step)
    np.testing.assert_allclose(got, weight_oracle(scores, labels, m=round(1 / step)), atol=1e-12)


def test_optimize_bad_inputs():
    with pytest.raises(ValueError):
        optimize_weights([[0.1, 0.2], [0.3, 0.4]], [1])
    with pytest.raises(ValueError):
        optimize_weights([[0.1], [0.3]], [1], grid_step=0.3)


def test_aggregate_result():
    pvs = [ProbabilityVector("x", 1, [0.9, 0.8, 0.1]), ProbabilityVector("x", 2, [0.2, 0.4])]
    r = aggregate(pvs)
    assert r.scale_scores[1] == pytest.approx(0.6) and r.scale_scores[2] == pytest.approx(0.3)
    assert r.final_score == pytest.approx(0.45) and r.decision == 0
    assert r.tile_counts == {1: 3, 2: 2}
    w = aggregate(pvs, "majority", {1: 1.0, 2: 0.0})
    assert w.final_score == pytest.approx(2 / 3) and w.decision == 1


def test_aggregate_errors():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([ProbabilityVector("x", 1, [0.1]), ProbabilityVector("y", 2, [0.1])])
    with pytest.raises(ValueError):
        aggregate([ProbabilityVector("x", 1, [0.1])], method="median")
