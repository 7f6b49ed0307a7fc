import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

import advgame as ag
from advgame import nets
from advgame.errors import InvalidInput, UnsupportedKind
from advgame.hypotheses import (
    Binned2D,
    Interval1D,
    as_mixture,
    hypothesis_from_dict,
    hypothesis_to_dict,
    interval_form,
    make_interval1d,
    mixture_from_dict,
    mixture_to_dict,
)


def test_threshold_decision_value():
    h = ag.Threshold(0.0)
    assert h.decision_value(np.array([0.3])) == pytest.approx(0.3)
    assert ag.Threshold(1.0, -1).decision_value(np.array([0.3])) == pytest.approx(0.7)


def test_linear_decision_value():
    h = ag.Linear((1.0, 0.0), 0.0)
    assert h.decision_value(np.array([0.3, 7.0])) == pytest.approx(0.3)


def test_bayes_decision_value_symmetry(spec_1d):
    h = ag.bayes_optimal(spec_1d)
    assert h.decision_value(np.array([0.0])) == pytest.approx(0.0, abs=1e-15)
    assert h.predict(np.array([0.5])) == 1
    assert h.predict(np.array([-0.5])) == -1


def test_predict_three_valued():
    h = ag.Threshold(0.0)
    assert h.predict(np.array([2.0])) == 1
    assert h.predict(np.array([-2.0])) == -1
    assert h.predict(np.array([0.0])) == 0


def test_region_flip_flips_inside():
    h = ag.Threshold(0.0)
    flipped = ag.RegionFlip(h, ag.IntervalRegion(0.0, 0.5))
    assert flipped.predict(np.array([0.25])) == -1
    assert flipped.predict(np.array([0.75])) == 1
    assert flipped.predict(np.array([-0.25])) == -1


def test_region_flip_involution():
    h = ag.Threshold(0.0)
    region = ag.IntervalRegion(-0.3, 0.7)
    twice = ag.RegionFlip(ag.RegionFlip(h, region), region)
    xs = np.linspace(-2, 2, 101).reshape(-1, 1)
    assert np.array_equal(twice.predicts(xs), h.predicts(xs))


def test_bayes_optimal_equals_threshold(spec_1d):
    h = ag.bayes_optimal(spec_1d)
    form = interval_form(h)
    assert len(form.breaks) == 1
    assert form.breaks[0] == pytest.approx(0.0, abs=1e-9)
    assert form.signs == (-1, 1)


def test_bayes_risk_closed_form(spec_1d, cfg_mass):
    # risk of the Bayes rule for symmetric unit Gaussians at +-1 is Phi(-1)
    value = ag.risk(ag.bayes_optimal(spec_1d), spec_1d, cfg_mass)
    assert value == pytest.approx(norm.cdf(-1.0), abs=1e-12)


def test_bayes_degenerate_prior_limit():
    spec = ag.DistributionSpec(
        1.0 - 1e-12, 1,
        (ag.GaussianComponent(1.0, (1.0,), (1.0,)),),
        (ag.GaussianComponent(1.0, (-1.0,), (1.0,)),),
    )
    h = ag.bayes_optimal(spec)
    for x in (-3.0, 0.0, 3.0):
        assert h.predict(np.array([x])) == 1


# ---------------------------------------------------------------------------
# Attackable regions
# ---------------------------------------------------------------------------

def test_attackable_region_threshold_intervals():
    pos, neg = ag.attackable_region(ag.Threshold(0.0), 0.5)
    assert pos.intervals() == [(0.0, 0.5)]
    assert neg.intervals() == [(-0.5, 0.0)]
    assert pos.contains(np.array([0.25]))
    assert pos.contains(np.array([0.5]))
    assert not pos.contains(np.array([0.0]))  # boundary predicts 0, not +1
    assert not pos.contains(np.array([0.51]))
    assert neg.contains(np.array([-0.5]))
    assert not neg.contains(np.array([0.6]))


def test_attackable_region_zero_budget():
    pos, neg = ag.attackable_region(ag.Threshold(0.0), 0.0)
    assert pos.intervals() == []
    xs = np.linspace(-1, 1, 41).reshape(-1, 1)
    assert not pos.contains_many(xs).any()
    assert not neg.contains_many(xs).any()


def test_attackable_region_linear_band_distance():
    # membership governed by the point-to-hyperplane distance |g| / ||w||_2
    w = (3.0, 4.0)  # norm 5
    h = ag.Linear(w, 0.0)
    pos, _ = ag.attackable_region(h, 0.5, "l2")
    inside = np.array([0.3, 0.4]) * 0.9  # g = 2.25, dist = 0.45 <= 0.5
    outside = np.array([0.3, 0.4]) * 1.2  # dist = 0.6
    assert pos.contains(inside)
    assert not pos.contains(outside)
    # l-inf distance uses the dual (l1) norm of w
    pos_inf, _ = ag.attackable_region(h, 0.5, "linf")
    x = np.array([0.3, 0.4])  # g = 2.5, linf dist = 2.5/7
    assert pos_inf.contains(x)
    assert not pos_inf.contains(1.5 * x)


def test_attackable_region_monotone_in_delta():
    h = ag.Threshold(0.2)
    rng = np.random.default_rng(0)
    xs = rng.uniform(-2, 2, (200, 1))
    small, _ = ag.attackable_region(h, 0.3)
    large, _ = ag.attackable_region(h, 0.8)
    inside_small = small.contains_many(xs)
    inside_large = large.contains_many(xs)
    assert np.all(~inside_small | inside_large)


def test_halfspace_and_hull_regions():
    hs = ag.hypotheses.HalfspaceRegion((1.0, -1.0), 0.0)
    assert hs.contains(np.array([2.0, 1.0]))
    assert not hs.contains(np.array([0.0, 1.0]))
    hull = ag.hypotheses.SampleHullRegion(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert hull.contains(np.array([0.2, 0.2]))
    assert not hull.contains(np.array([0.8, 0.8]))
    flipped = ag.RegionFlip(ag.Linear((1.0, 0.0), -0.1), hull)
    assert flipped.predict(np.array([0.2, 0.2])) != ag.Linear((1.0, 0.0), -0.1).predict(np.array([0.2, 0.2]))


def test_attackable_region_mlp_membership(spec_2d):
    # mlp kind has no closed geometry: membership via the ball search
    net = nets.init_mlp((2, 8, 2), seed=0)
    h = ag.Mlp(net)
    pos, neg = ag.attackable_region(h, 0.3)
    rng = np.random.default_rng(1)
    xs = rng.uniform(0, 1, (20, 2))
    got = pos.contains_many(xs)
    preds = h.predicts(xs)
    assert not got[preds != 1].any()


# ---------------------------------------------------------------------------
# Interval form
# ---------------------------------------------------------------------------

def test_interval_form_canonicalizes_same_sign_cells():
    form = make_interval1d([0.0, 1.0], [-1, -1, 1])
    assert form.breaks == (1.0,)
    assert form.signs == (-1, 1)


def test_interval1d_point_labels():
    h = Interval1D((0.0,), (-1, 1), ((0.0, 1),))
    assert h.predict(np.array([0.0])) == 1
    h2 = Interval1D((0.0,), (-1, 1))
    assert h2.predict(np.array([0.0])) == 0
    with pytest.raises(InvalidInput):
        Interval1D((0.0,), (-1, 1), ((0.5, 1),))  # label not at a break


def test_interval_form_region_flip_merges():
    # flipping the band of a threshold just moves the boundary
    h = ag.RegionFlip(ag.Threshold(0.0), ag.IntervalRegion(0.0, 0.5))
    form = interval_form(h)
    assert form.breaks == (0.5,)
    assert form.signs == (-1, 1)


def test_interval_form_unsupported():
    net = nets.init_mlp((1, 4, 1), seed=0)
    with pytest.raises(UnsupportedKind):
        interval_form(ag.Mlp(net))


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-5, 5), t=st.floats(-2, 2))
def test_predict_equals_sign_of_decision_value(x, t):
    for h in (ag.Threshold(t), ag.Linear((2.0,), -t),
              ag.RegionFlip(ag.Threshold(t), ag.IntervalRegion(-1.0, 1.0))):
        point = np.array([x])
        assert h.predict(point) == int(np.sign(h.decision_value(point)))


# ---------------------------------------------------------------------------
# Mixtures
# ---------------------------------------------------------------------------

def test_mixture_distribution_weights():
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (0.7, 0.3))
    out = m.mixture_distribution(np.array([0.5]))  # h1 says +1, h2 says -1
    assert out[1] == pytest.approx(0.7)
    assert out[-1] == pytest.approx(0.3)
    assert sum(out.values()) == pytest.approx(1.0)


def test_mixture_unanimity_and_degenerate():
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(-1.0)), (0.6, 0.4))
    assert m.mixture_distribution(np.array([2.0]))[1] == pytest.approx(1.0)
    single = ag.MixedClassifier((ag.Threshold(0.0),), (1.0,))
    assert single.mixture_distribution(np.array([1.0]))[1] == pytest.approx(1.0)


def test_mixture_abstain_mass_at_boundary():
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (0.5, 0.5))
    out = m.mixture_distribution(np.array([0.0]))
    assert out[0] == pytest.approx(0.5)  # h1 outputs 0 exactly at its boundary


def test_mixture_sample_deterministic_and_degenerate():
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (1.0, 0.0))
    assert m.sample(np.array([0.5]), seed=0, index=3) == 1
    m2 = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (0.7, 0.3))
    a = m2.sample(np.array([0.5]), seed=5, index=11)
    b = m2.sample(np.array([0.5]), seed=5, index=11)
    assert a == b


def test_mixture_sample_frequency_matches_distribution():
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (0.7, 0.3))
    x = np.array([0.5])
    n = 10 ** 5
    draws = np.array([m.sample(x, seed=7, index=i) for i in range(n)])
    frac = (draws == 1).mean()
    assert abs(frac - 0.7) < 5 / math.sqrt(n)


def test_mixture_validation():
    with pytest.raises(InvalidInput):
        ag.MixedClassifier((ag.Threshold(0.0),), (0.9,))
    with pytest.raises(InvalidInput):
        ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (1.2, -0.2))


@settings(max_examples=20, deadline=None)
@given(q=st.floats(0.01, 0.99), x=st.floats(-3, 3))
def test_mixture_distribution_sums_to_one(q, x):
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(0.5, -1)), (q, 1 - q))
    out = m.mixture_distribution(np.array([x]))
    assert sum(out.values()) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_hypothesis_roundtrips(spec_1d):
    net = nets.init_mlp((2, 8, 2), seed=1)
    cases = [
        ag.Threshold(0.3, -1),
        ag.Linear((1.0, -2.0), 0.5),
        ag.bayes_optimal(spec_1d),
        ag.Mlp(net),
        ag.RegionFlip(ag.Threshold(0.0), ag.IntervalRegion(0.0, 1.0)),
        Interval1D((0.0, 1.0), (-1, 1, -1), ((0.0, 1),)),
        Binned2D(((0.0, 0.5, 1.0), (0.0, 0.5, 1.0)), ((1, -1), (-1, 1))),
    ]
    for h in cases:
        back = hypothesis_from_dict(hypothesis_to_dict(h))
        xs = np.linspace(-2, 2, 23)
        pts = xs.reshape(-1, 1) if back.dimension == 1 else np.column_stack([xs, xs])
        assert np.array_equal(back.predicts(pts), h.predicts(pts))


def test_mlp_roundtrip_bitexact():
    net = nets.init_mlp((2, 16, 16, 2), seed=2)
    back = nets.mlp_from_dict(nets.mlp_to_dict(net))
    for w1, w2 in zip(net.weights, back.weights):
        assert np.array_equal(w1, w2)


def test_mixture_roundtrip():
    m = ag.MixedClassifier((ag.Threshold(0.0), ag.Threshold(1.0)), (0.25, 0.75))
    back = mixture_from_dict(mixture_to_dict(m))
    assert back.weights == m.weights
    xs = np.linspace(-1, 2, 31).reshape(-1, 1)
    assert np.allclose(back.expected_errors(xs, 1), m.expected_errors(xs, 1))
