import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from dampednls.criteria import (
    Branch, evaluate_all, negativity_time, quadratic, radial_criterion, sigma_criterion,
    sigma_predicate,
)
from dampednls.model import ProblemSpec

import oracles

reals = st.floats(-50, 50, allow_nan=False)
positive = st.floats(1e-3, 50)


def first_root(c0, c1, c2):
    roots = [z for z in oracles.quadratic_roots(c0, c1, c2) if z > 0]
    return min(roots)


def test_sigma_examples():
    v = sigma_criterion(-1, 0, 1)
    assert v.branch is Branch.NegativeEnergy and v.predicted_blowup
    assert math.isclose(v.t_star, first_root(1, 0, -8), rel_tol=1e-15)
    assert math.isclose(v.t_star, 1 / (2 * math.sqrt(2)), rel_tol=1e-15)

    v = sigma_criterion(0, -3, 1)
    assert v.branch is Branch.ZeroEnergyNegativeMomentum
    assert math.isclose(v.t_star, 1 / 12, rel_tol=1e-15)

    v = sigma_criterion(1, -3, 1)
    assert v.branch is Branch.PositiveEnergyDiscriminant
    assert math.isclose(v.t_star, (12 - math.sqrt(112)) / 16, rel_tol=1e-14)
    assert math.isclose(v.t_star, first_root(1, -12, 8), rel_tol=1e-14)

    v = sigma_criterion(1, 0, 1)
    assert not v.predicted_blowup and v.branch is Branch.NoBranch and v.t_star is None


def test_sigma_zero_discriminant_is_boundary():
    # V^2 = 2EI exactly: strict inequality fails
    v = sigma_criterion(2.0, -2.0, 1.0)
    assert not v.predicted_blowup and v.boundary


def test_sigma_rejects_negative_I():
    with pytest.raises(ValueError):
        sigma_criterion(-1, 0, -1)


def test_sigma_applicability():
    assert sigma_criterion(-1, 0, 1, "1.2", ProblemSpec(1, 4)).applicable
    assert not sigma_criterion(-1, 0, 1, "1.4", ProblemSpec(1, 4)).applicable
    assert sigma_criterion(-1, 0, 1, "1.6", ProblemSpec(3, 4)).applicable
    assert not sigma_criterion(-1, 0, 1, "1.2", ProblemSpec(1, 4, mu=1)).applicable


def test_radial_examples():
    v = radial_criterion(-1, 0, 1, ProblemSpec(2, 2), "1.3")
    assert v.applicable and v.predicted_blowup
    assert math.isclose(v.t_star, 1 / math.sqrt(6), rel_tol=1e-15)

    v = radial_criterion(1, -10, 1, ProblemSpec(3, 2), "1.5")
    assert v.predicted_blowup and v.branch is Branch.PositiveEnergyDiscriminant
    assert -10 + math.sqrt(12) < 0

    v = radial_criterion(-1, 0, 1, ProblemSpec(1, 4), "1.3")
    assert not v.applicable and not v.predicted_blowup


def test_radial_applicability_ranges():
    assert radial_criterion(-1, 0, 1, ProblemSpec(2, 4), "1.5").applicable
    assert not radial_criterion(-1, 0, 1, ProblemSpec(2, 2), "1.5").applicable
    assert not radial_criterion(-1, 0, 1, ProblemSpec(2, 4.5), "1.5").applicable
    assert radial_criterion(-1, 0, 1, ProblemSpec(3, 4), "1.8").applicable
    assert not radial_criterion(-1, 0, 1, ProblemSpec(3, 3), "1.8").applicable
    assert not radial_criterion(-1, 0, 1, ProblemSpec(2, 2), "1.3", radial=False).applicable


def test_radial_delta_choices():
    v = radial_criterion(0.0, -2.0, 1.0, ProblemSpec(2, 2), "1.3")
    assert v.delta_used == 0.5 and v.quadratic == (1.0, -4.0, 0.5)
    assert 4.0 - v.delta_used * 1.0 > 0
    v = radial_criterion(1.0, -4.0, 1.0, ProblemSpec(2, 2), "1.3")
    # W^2 / (8EJ) - 1 = 1, so delta = 1/2
    assert v.delta_used == 0.5
    assert v.quadratic == (1.0, -8.0, 12.0)
    assert 16 - 8 * (1 + v.delta_used) > 0


def test_negativity_time_extreme_scales():
    # 4 c0 c2 underflows unless the coefficients are rescaled first
    c0, c = 1.0313660878628718e-135, 1.4367356280595657e-190
    for c1 in (c, -c):
        t = negativity_time(c0, c1, -c)
        assert t is not None and quadratic(c0, c1, -c, t) <= 0
        assert quadratic(c0, c1, -c, 0.9 * t) > 0
        assert math.isclose(t, first_root(c0, c1, -c), rel_tol=1e-12)


def test_negativity_time_examples():
    assert math.isclose(negativity_time(1, -12, 0), 1 / 12, rel_tol=1e-15)
    assert negativity_time(1, 0, 8) is None
    assert math.isclose(negativity_time(1, -12, 8), first_root(1, -12, 8), rel_tol=1e-14)
    assert negativity_time(0, 0, 0) is None
    assert negativity_time(-1, 5, 5) == 0.0


@given(reals, reals, reals)
def test_t_star_is_first_negative_time(c0, c1, c2):
    t = negativity_time(c0, c1, c2)
    if t is None:
        return
    assert quadratic(c0, c1, c2, t) <= 0
    if t > 1e-9:
        for frac in (0.25, 0.5, 0.9):
            probe = frac * (t - 1e-9)
            assert quadratic(c0, c1, c2, probe) > 0


normal = st.floats(-50, 50, allow_subnormal=False)


@given(normal, normal, st.floats(0, 50, allow_subnormal=False), st.floats(0.01, 100))
def test_sigma_scale_coherent(E, V, I, lam):
    a = sigma_criterion(E, V, I)
    b = sigma_criterion(lam * E, lam * V, lam * I)
    assert a.predicted_blowup == b.predicted_blowup
    if a.t_star is not None and not a.boundary:
        assert a.branch == b.branch
        assert math.isclose(a.t_star, b.t_star, rel_tol=1e-9, abs_tol=1e-12)


@given(normal, normal, st.floats(0, 50, allow_subnormal=False), st.integers(-20, 20))
def test_sigma_scale_exact_for_powers_of_two(E, V, I, k):
    lam = 2.0**k
    # exactness needs the scaled inputs to stay normal
    assume(all(x == 0 or abs(lam * x) >= 2.2250738585072014e-308 for x in (E, V, I)))
    a = sigma_criterion(E, V, I)
    b = sigma_criterion(lam * E, lam * V, lam * I)
    assert (a.branch, a.predicted_blowup, a.t_star) == (b.branch, b.predicted_blowup, b.t_star)


@given(positive, reals, st.floats(0, 50))
def test_two_forms_of_positive_energy_condition(E, V, I):
    disc = V * V - 2 * E * I
    assume(abs(disc) > 1e-9 * max(V * V, 2 * E * I, 1e-300))
    first = V < 0 and disc > 0
    assert first == sigma_predicate(E, V, I) == sigma_criterion(E, V, I).predicted_blowup


@given(reals, reals, st.floats(0, 50))
def test_verdict_invariants(E, V, I):
    v = sigma_criterion(E, V, I)
    assert v.predicted_blowup == (v.branch is not Branch.NoBranch)
    assert (v.t_star is not None) == v.predicted_blowup


@settings(max_examples=200)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0.01, 10))
def test_radial_prediction_implies_sigma_when_J_is_I(E, V, I):
    # for data inside r <= R, J = I and W = 2V; then 2V + sqrt(12 E I) < 0 forces V + sqrt(2 E I) < 0
    spec = ProblemSpec(3, 2)
    rad = radial_criterion(E, 2 * V, I, spec, "1.5")
    sig = sigma_criterion(E, V, I)
    if rad.predicted_blowup:
        assert sig.predicted_blowup


def test_evaluate_all_radial_only_with_JW():
    spec = ProblemSpec(2, 2)
    assert len(evaluate_all(-1, 0, 1, None, None, spec)) == 3
    out = evaluate_all(-1, 0, 1, 1, 0, spec)
    assert [v.theorem for v in out if v.applicable] == ["1.2", "1.3"]


wide = st.floats(-1e300, 1e300, allow_nan=False)


@settings(max_examples=500)
@given(wide, wide, wide)
def test_t_star_over_the_float_range(c0, c1, c2):
    t = negativity_time(c0, c1, c2)
    if t is None or math.isinf(t):
        return
    assert quadratic(c0, c1, c2, t) <= 0
    if t > 1e-9:
        assert quadratic(c0, c1, c2, 0.5 * (t - 1e-9)) > 0


def test_radial_delta_with_subnormal_energy():
    v = radial_criterion(5e-324, -1.0, 0.03125, ProblemSpec(3, 2), "1.5")
    assert v.predicted_blowup and v.delta_used == 1.0
