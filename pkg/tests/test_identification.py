import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elicitkit import distributions as D
from elicitkit import identification as I
from elicitkit.errors import DimensionMismatch, EmptyFamily, FamilyTooSmall, NotOnLevelSet, UnsupportedSpec
from elicitkit.losses import asymmetric_squared_loss, es_base_loss, squared_loss
from elicitkit.properties import PropertySpec, oracle_expected_shortfall, oracle_expectile, oracle_variantile

from conftest import SUITE

SUITE_DISTS = [p for _, p in SUITE]


def central(p, n):
    return float(p.probs @ (p.outcomes - p.mean) ** n)


def test_standard_examples(u4):
    V = I.standard_identification(PropertySpec.mean())
    assert V.expect([2.5], u4) == pytest.approx([0.0])
    V = I.standard_identification(PropertySpec.quantile(0.3))
    assert V.expect([2.0], u4) == pytest.approx([0.2])
    V = I.standard_identification(PropertySpec.expectile(0.5))
    assert V.expect([u4.mean], u4) == pytest.approx([0.0], abs=1e-15)
    assert I.standard_identification(PropertySpec.raw_moment(2)).expect([7.5], u4) == pytest.approx([0.0])
    with pytest.raises(UnsupportedSpec):
        I.standard_identification(PropertySpec.variance())


def test_central_moment_examples(u4):
    V2, V3 = I.central_moment_identification(2), I.central_moment_identification(3)
    assert V2.expect([2.5, 1.25], u4) == pytest.approx([0, 0], abs=1e-15)
    assert V3.expect([0, 0], D.uniform([-1, 1])) == pytest.approx([0, 0], abs=1e-15)
    expected_mu3 = sum((y - 2.5) ** 3 for y in (1, 2, 3, 4)) / 4
    assert V3.expect([2.5, 0], u4) == pytest.approx([0, expected_mu3], abs=1e-15)
    with pytest.raises(UnsupportedSpec):
        I.central_moment_identification(1)


def test_bayes_risk_identification_examples(u4):
    V = I.bayes_risk_identification(I.mean_identification(), squared_loss())
    assert V.expect([1.25, 2.5], u4) == pytest.approx([0, 0], abs=1e-15)
    assert V.expect([0.0, 2.5], u4) == pytest.approx([0, 1.25], abs=1e-15)
    assert V.expect([0.0, 3.0], D.point_mass(3.0)) == pytest.approx([0, 0])
    with pytest.raises(DimensionMismatch):
        I.bayes_risk_identification(I.central_moment_identification(2), squared_loss())


def test_stack_examples(u4):
    V = I.stack_identifications(I.mean_identification(), I.conditional_central_moment(2), [0], [1, 0])
    assert I.verify_zero(V, [2.5, 1.25], u4)[0]
    assert not I.verify_zero(V, [2.5, 1.2], u4)[0]
    Z = I.stack_identifications(I.mean_identification(), I.zero_identification(), [0], [0])
    assert I.verify_zero(Z, [2.5], u4)[0] and not I.verify_zero(Z, [2.4], u4)[0]
    Q = I.stack_identifications(I.quantile_identification(0.25), I.quantile_identification(0.75), [0], [1])
    p = D.uniform([1, 2, 3, 4])
    for a in (1.2, 1.9):
        for b in (3.1, 3.8):
            assert I.verify_zero(Q, [a, b], p)[0]
    assert not I.verify_zero(Q, [2.1, 3.5], p)[0]
    with pytest.raises(DimensionMismatch):
        I.stack_identifications(I.mean_identification(), I.mean_identification(), [0, 1], [0])


def test_verify_zero_examples(u4):
    ok, res = I.verify_zero(I.mean_identification(), [2.5], u4)
    assert ok
    ok, res = I.verify_zero(I.mean_identification(), [2.4], u4)
    assert not ok and res[0] == pytest.approx(0.1)
    V = I.es_joint_identification(0.5)
    for a in (2.0 + 1e-6, 2.5, 3.0 - 1e-6):
        assert I.verify_zero(V, [-1.5, a], u4)[0]


def test_rank_examples():
    fam = [D.discretized_normal(m, s) for m in np.linspace(-1, 1, 5) for s in (0.6, 1.0, 1.4, 2.0)]
    V = I.stack_identifications(I.quantile_identification(0.25), I.quantile_identification(0.5), [0], [1])
    V = I.stack_identifications(V, I.quantile_identification(0.75), [0, 1], [2])
    assert I.identification_rank(V, [-0.5, 0.1, 0.5], fam) == 3
    dup = I.stack_identifications(I.mean_identification(), I.mean_identification(), [0], [1])
    assert I.identification_rank(dup, [0.5, 0.5], fam) == 1
    masses = [D.point_mass(c) for c in (-1.0, 0.0, 2.0)]
    assert I.identification_rank(I.mean_identification(), [0.3], masses) == 1
    with pytest.raises(EmptyFamily):
        I.identification_rank(I.mean_identification(), [0.0], [])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rank_invariant_under_invertible_mixing(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(2, 2))
    if abs(np.linalg.det(M)) < 1e-2:
        M += np.eye(2)
    fam = [D.random_finite(rng, n=5) for _ in range(6)]
    for V, r in [
        (I.central_moment_identification(2), [0.3, 1.0]),
        (I.stack_identifications(I.mean_identification(), I.mean_identification(), [0], [1]), [0.2, 0.2]),
        (I.stack_identifications(I.quantile_identification(0.3), I.quantile_identification(0.7), [0], [1]), [-0.1, 1.2]),
    ]:
        assert I.identification_rank(I.linear_recombination(V, M), r, fam) == I.identification_rank(V, r, fam)


MU4_FAMILY = [D.make_finite([-2, 0, 2], [3 / 16, 5 / 8, 3 / 16]), D.make_finite([-1, 2], [2 / 3, 1 / 3])]
VAR_FAMILY = [D.uniform([-1, 1]), D.make_finite([-2, 0, 2], [1 / 8, 3 / 4, 1 / 8])]
ES_FAMILY = [D.make_finite([-2, 1], [0.25, 0.75]), D.make_finite([-3, -1, 2, 5], [0.125, 0.125, 0.25, 0.5])]


def test_moment_matched_families_are_on_level_sets():
    assert [p.mean for p in MU4_FAMILY] == pytest.approx([0, 0], abs=1e-15)
    assert [central(p, 4) for p in MU4_FAMILY] == pytest.approx([6, 6])
    assert [central(p, 3) for p in MU4_FAMILY] == pytest.approx([0, 2])
    assert [oracle_expected_shortfall(p, 0.25) for p in ES_FAMILY] == pytest.approx([2, 2])
    assert [oracle_variantile(p, 0.5) for p in VAR_FAMILY] == pytest.approx([0.5, 0.5])


def test_obstruction_flags_moment_pairs():
    Vp, V = I.moment_pair(3)
    rep = I.joint_obstruction_diagnostic(Vp, V, [D.uniform([-1, 1]), D.uniform([-2, 2])], [0], [0])
    assert rep.flagged and rep.constant_blocks_ok and rep.family_size == 2
    blocks = sorted(float(b[0, 0]) for b in rep.varying_block_values)
    assert blocks == pytest.approx([-12, -3], abs=1e-6)
    Vp, V = I.moment_pair(4)
    rep = I.joint_obstruction_diagnostic(Vp, V, MU4_FAMILY, [0], [6])
    assert rep.flagged
    assert sorted(float(b[0, 0]) for b in rep.varying_block_values) == pytest.approx([-8, 0], abs=1e-6)
    json.dumps(rep.to_json())


@pytest.mark.parametrize(
    "pair, family, rp, r",
    [
        (I.variance_mean_pair(), VAR_FAMILY, [0], [1]),
        (I.es_quantile_pair(0.25), ES_FAMILY, [0], [2]),
        (I.variantile_expectile_pair(0.5), VAR_FAMILY, [0], [0.5]),
    ],
)
def test_obstruction_clears_bayes_risk_pairs(pair, family, rp, r):
    rep = I.joint_obstruction_diagnostic(*pair, family, rp, r)
    assert not rep.flagged and rep.constant_blocks_ok and rep.variation < 1e-6


def test_obstruction_identical_family_not_flagged():
    Vp, V = I.moment_pair(3)
    p = D.uniform([-1, 1])
    assert not I.joint_obstruction_diagnostic(Vp, V, [p, p, p], [0], [0]).flagged


def test_obstruction_errors():
    Vp, V = I.moment_pair(3)
    with pytest.raises(FamilyTooSmall):
        I.joint_obstruction_diagnostic(Vp, V, [D.uniform([-1, 1])], [0], [0])
    with pytest.raises(NotOnLevelSet):
        I.joint_obstruction_diagnostic(Vp, V, [D.uniform([-1, 1]), D.uniform([0, 1])], [0], [0])


def zero_at_oracle_cases():
    for p in SUITE_DISTS:
        m = p.mean
        yield I.mean_identification(), [m], p
        yield I.raw_moment_identification(3), [float(p.probs @ p.outcomes**3)], p
        for tau in (0.2, 0.5, 0.9):
            yield I.expectile_identification(tau), [oracle_expectile(p, tau)], p
            yield I.bayes_risk_identification(I.expectile_identification(tau), asymmetric_squared_loss(tau)), [
                oracle_variantile(p, tau), oracle_expectile(p, tau)], p
        for n in (2, 3, 4):
            yield I.central_moment_identification(n), [m, central(p, n)], p
        yield I.bayes_risk_identification(I.mean_identification(), squared_loss()), [central(p, 2), m], p


@pytest.mark.parametrize("V, r, p", list(zero_at_oracle_cases()))
def test_expectation_zero_at_oracle(V, r, p):
    assert I.verify_zero(V, r, p)[0]


@pytest.mark.parametrize("p", SUITE_DISTS)
@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5, 0.9])
def test_quantile_identification_at_oracle(p, alpha):
    # on a flat stretch the expectation is exactly zero; at a jump it changes sign across the atom
    V = I.quantile_identification(alpha)
    iv = D.quantile_set(p, alpha)
    if not iv.degenerate:
        assert I.verify_zero(V, [iv.mid], p)[0]
        assert I.verify_zero(I.es_joint_identification(alpha), [oracle_expected_shortfall(p, alpha), iv.mid], p)[0]
    else:
        assert V.expect([iv.lo - 1e-9], p)[0] < 0 <= V.expect([iv.lo], p)[0]


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(SUITE_DISTS), st.floats(-3, 3), st.floats(-1, 5))
def test_stack_zero_set_is_intersection(p, a, b):
    V1, V2 = I.mean_identification(), I.conditional_central_moment(2)
    W = I.stack_identifications(V1, V2, [0], [1, 0])
    for r in ([a, b], [p.mean, b], [p.mean, central(p, 2)], [a, central(p, 2)]):
        both = I.verify_zero(V1, [r[0]], p)[0] and I.verify_zero(V2, [r[1], r[0]], p)[0]
        assert I.verify_zero(W, r, p)[0] == both
