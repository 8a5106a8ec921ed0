import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elicitkit import distributions as D
from elicitkit.errors import (
    AlphaOutOfRange,
    EmptySample,
    InvalidInterval,
    LambdaOutOfRange,
    LengthMismatch,
    NegativeProbability,
    NonFiniteValue,
    NotNormalized,
    ParseError,
    ZeroTotalMass,
)

from strategies import finite_distributions, levels, mix_weights


def test_make_finite_canonical_forms():
    p = D.make_finite([1, 2, 3, 4], [0.25] * 4)
    assert p.outcomes.tolist() == [1, 2, 3, 4] and p.probs.tolist() == [0.25] * 4
    q = D.make_finite([2, 1], [0.5, 0.5])
    assert q.outcomes.tolist() == [1, 2] and q.probs.tolist() == [0.5, 0.5]
    r = D.make_finite([0, 0, 1], [0.25, 0.25, 0.5])
    assert r.outcomes.tolist() == [0, 1] and r.probs.tolist() == [0.5, 0.5]


def test_make_finite_renormalizes_small_error():
    p = D.make_finite([0, 1], [0.5, 0.5 + 5e-10])
    assert abs(p.probs.sum() - 1.0) < 1e-12


@pytest.mark.parametrize(
    "outcomes, probs, err",
    [
        ([1, 2], [1.0], LengthMismatch),
        ([1, 2], [1.5, -0.5], NegativeProbability),
        ([1, 2], [0.0, 0.0], ZeroTotalMass),
        ([1, 2], [0.5, 0.6], NotNormalized),
        ([1, float("nan")], [0.5, 0.5], NonFiniteValue),
    ],
)
def test_make_finite_rejects(outcomes, probs, err):
    with pytest.raises(err):
        D.make_finite(outcomes, probs)


def test_mix_examples():
    m = D.mix(D.point_mass(0), D.point_mass(1), 0.5)
    assert m == D.make_finite([0, 1], [0.5, 0.5])
    p = D.uniform([1, 2, 3, 4])
    assert D.mix(p, D.point_mass(7), 1.0) == p
    m = D.mix(D.uniform([-1, 1]), D.uniform([9, 11]), 0.5)
    assert m.outcomes.tolist() == [-1, 1, 9, 11] and np.allclose(m.probs, 0.25)
    with pytest.raises(LambdaOutOfRange):
        D.mix(p, p, 1.5)


def test_expectation_examples(u4):
    assert D.expectation(u4, lambda y: y) == 2.5
    assert D.expectation(u4, lambda y: y**2) == 7.5
    assert D.expectation(D.point_mass(3.0), np.exp) == pytest.approx(np.exp(3.0), rel=1e-15)
    with pytest.raises(NonFiniteValue):
        D.expectation(u4, lambda y: np.where(y > 3, np.inf, y))


def test_cdf_examples(u4):
    assert D.cdf(u4, 2.5) == 0.5
    assert D.cdf(u4, 0) == 0
    assert D.cdf(u4, 4) == 1


def test_quantile_set_examples(u4):
    assert D.quantile_set(u4, 0.5).as_list() == [2.0, 3.0]
    assert D.quantile_set(u4, 0.3).as_list() == [2.0, 2.0]
    for a in (0.1, 0.5, 0.9):
        assert D.quantile_set(D.point_mass(1.7), a).as_list() == [1.7, 1.7]
    with pytest.raises(AlphaOutOfRange):
        D.quantile_set(u4, 1.0)


def test_from_samples_examples(u4):
    assert D.from_samples([1, 1, 2]) == D.make_finite([1, 2], [2 / 3, 1 / 3])
    assert D.from_samples([5]) == D.point_mass(5)
    assert D.from_samples([1, 2, 3, 4]) == u4
    with pytest.raises(EmptySample):
        D.from_samples([])


def test_interval_validation():
    with pytest.raises(InvalidInterval):
        D.Interval(2.0, 1.0)
    iv = D.Interval(1.0, 3.0)
    assert iv.mid == 2.0 and iv.contains(3.0) and not iv.degenerate


def test_csv_reader():
    s = D.read_samples_csv(io.StringIO("y\n1\n\n2.5\n"))
    assert s.values == (1.0, 2.5)
    with pytest.raises(ParseError):
        D.read_samples_csv(io.StringIO("y\n1\nabc\n"))
    with pytest.raises(ParseError):
        D.read_samples_csv(io.StringIO("1,2\n"))
    with pytest.raises(ParseError):
        D.read_samples_csv(io.StringIO("y\n"))


def test_json_round_trip(u4):
    assert D.distribution_from_dict(u4.to_dict()) == u4
    with pytest.raises(ParseError):
        D.distribution_from_dict({"outcomes": [1]})


@settings(max_examples=200, deadline=None)
@given(finite_distributions(), finite_distributions(), mix_weights)
def test_expectation_is_linear_in_mixtures(p, q, lam):
    f = lambda y: np.sin(y) + y**2
    lhs = D.expectation(D.mix(p, q, lam), f)
    rhs = lam * D.expectation(p, f) + (1 - lam) * D.expectation(q, f)
    assert abs(lhs - rhs) < 1e-12


@settings(max_examples=200, deadline=None)
@given(finite_distributions())
def test_cdf_monotone_and_right_continuous(p):
    eps = 1e-9
    xs = np.sort(np.concatenate([p.outcomes - eps, p.outcomes, p.outcomes + eps]))
    F = D.cdf(p, xs)
    assert np.all(np.diff(F) >= 0)
    # right-continuity: the value at an atom equals the value just above it
    assert np.allclose(D.cdf(p, p.outcomes), D.cdf(p, p.outcomes + eps), atol=1e-15)
    assert np.isclose(D.cdf(p, p.max), 1.0)


@settings(max_examples=200, deadline=None)
@given(finite_distributions(), levels)
def test_quantile_lower_end_is_generalized_inverse(p, alpha):
    lo = D.quantile_set(p, alpha).lo
    gap = np.min(np.diff(p.outcomes)) if p.size > 1 else 1.0
    assert D.cdf(p, lo) >= alpha - 1e-12
    assert D.cdf(p, lo - 0.5 * gap) < alpha


@settings(max_examples=200, deadline=None)
@given(finite_distributions(), levels)
def test_quantile_set_brute_force(p, alpha):
    # every atom inside the set satisfies F(x-) <= alpha <= F(x), atoms outside do not
    iv = D.quantile_set(p, alpha)
    F = np.cumsum(p.probs)
    Fm = F - p.probs
    for x, a, b in zip(p.outcomes, Fm, F):
        inside = a <= alpha + 1e-12 and alpha <= b + 1e-12
        assert inside == iv.contains(x, 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=30))
def test_from_samples_frequencies(values):
    p = D.from_samples(values)
    for x, w in zip(p.outcomes, p.probs):
        assert w == pytest.approx(values.count(int(x)) / len(values), abs=1e-15)
