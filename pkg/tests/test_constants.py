from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudodaugavet.constants import case_constants, delta_sweep, gamma_of
from pseudodaugavet.errors import DomainError


def _mp(q):
    return mpmath.mpf(q.numerator) / q.denominator


def exact_constants(p):
    """Integer ``p``: rational constants via Fractions, roots in 50-digit mpmath."""
    C = Fraction(p, 4) * (3 ** (p - 1) - 3)
    M = p * (p - 1) * 4**p
    D = C / (8 * 3**p * p)
    delta = min(Fraction(1, 8), 4 * C / M, 8 * D)
    lam = -delta / 4
    with mpmath.workdps(50):
        gamma = mpmath.root(_mp(1 - delta * p * D), p)
        rho = 1 / (gamma + _mp(delta * abs(lam)) / 2)
        return dict(C_p=C, M_p=M, D_p=D, delta_p=delta, lambda_p=lam, gamma_p=float(gamma), rho_p=float(rho))


@pytest.mark.parametrize("p", [3, 4, 5, 7])
def test_matches_exact_oracle(p):
    got = case_constants(p).as_dict()
    for key, val in exact_constants(p).items():
        assert got[key] == pytest.approx(float(val), rel=1e-15, abs=0), key


def test_p3_values():
    c = case_constants(3)
    assert (c.C_p, c.M_p, c.D_p, c.delta_p, c.lambda_p) == (4.5, 384.0, pytest.approx(1 / 144, rel=1e-15), 0.046875, -0.01171875)
    assert c.gamma_p == pytest.approx(0.9996743731453273, rel=1e-15)
    assert c.rho_p == pytest.approx(1.0000509712494836, rel=1e-15)


def test_p3_delta_is_the_curvature_bound():
    c = case_constants(3)
    assert c.delta_p == 4 * c.C_p / c.M_p < 8 * c.D_p < 0.125


@pytest.mark.parametrize("p", [2.0, 1.5, 1.0, -3.0])
def test_domain(p):
    with pytest.raises(DomainError):
        case_constants(p)


def test_margin_near_two_is_positive_but_tiny():
    c = case_constants(2.05)
    assert c.rho_p > 1
    assert c.rho_p - 1 < 1e-10
    assert c.satisfies_invariants()


def test_gamma_of_domain():
    with pytest.raises(DomainError):
        gamma_of(3, 0.2)
    with pytest.raises(DomainError):
        gamma_of(3, -0.01)
    assert gamma_of(3, 0.0) == 1.0


def test_delta_sweep_is_labeled():
    rep = delta_sweep(3, num=33)
    assert rep["label"].startswith("exploratory")
    assert rep["delta_p"] == case_constants(3).delta_p
    assert len(rep["deltas"]) == 33
    assert 1 < rep["best_bound"]


def test_margin_vanishes_in_float64_very_close_to_two():
    # rho_p - 1 is O((p - 2)^2) and drops below one ulp of 1.0 around p = 2.002
    assert case_constants(2.001953125).rho_p == 1.0


@given(st.floats(2.05, 16.0))
@settings(max_examples=300, deadline=None)
def test_invariants_hold(p):
    c = case_constants(p)
    assert c.satisfies_invariants(), c.invariant_checks()
    # Bernoulli: (1 - p d D)^(1/p) <= 1 - d D
    assert c.gamma_p <= 1 - c.delta_p * c.D_p + 1e-16


@given(st.floats(2.01, 10.0), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_gamma_decreasing_in_delta(p, u, v):
    c = case_constants(p)
    hi = min(0.125, 4 * c.C_p / c.M_p)
    d1, d2 = sorted((u * hi, v * hi))
    assert gamma_of(p, d2) <= gamma_of(p, d1)


def test_slope_constants_increase_with_p():
    grid = np.linspace(2.05, 16, 400)
    cs = [case_constants(p) for p in grid]
    assert all(a.C_p < b.C_p and a.D_p < b.D_p for a, b in zip(cs, cs[1:]))
