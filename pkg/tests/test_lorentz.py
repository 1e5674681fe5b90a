import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from pseudodaugavet.errors import DomainError, RangeError, WeightSpecError
from pseudodaugavet.lorentz import (
    LorentzSpace,
    PiecewiseConstantWeight,
    PowerWeight,
    counterexample_weight,
    lorentz_norm,
    lpq_weight,
    normalized,
    parse_weight_spec,
    unit_weight,
    validate_weight,
    weight_mass,
)
from pseudodaugavet.stepfn import build, combine, from_arrays, rearrange
from pseudodaugavet.verify import random_piecewise_weight

from .conftest import random_function, random_space, simple_functions, spaces


def _block_mass(w, lo, hi):
    if isinstance(w, PowerWeight):
        if lo == 0:
            # QAWS handles the algebraic endpoint singularity
            return quad(lambda t: w.scale, 0.0, hi, weight="alg", wvar=(w.alpha, 0.0))[0]
        return quad(w, lo, hi, limit=200)[0]
    return float(mpmath.quad(lambda t: float(w(float(t))), [lo, *[k for k in w.breakpoints if lo < k < hi], hi]))


def quad_norm(space, f):
    """``(int_0^1 f*(t)^p w(t) dt)^(1/p)`` by numerical quadrature, split at the profile breakpoints."""
    prof = rearrange(f)
    edges = prof.breakpoints
    w = space.weight
    total = 0.0
    for lo, hi, a in zip(edges[:-1], edges[1:], prof.magnitudes):
        if hi > lo:
            total += a**space.p * _block_mass(w, lo, hi)
    return total ** (1 / space.p)


def test_unit_weight_masses():
    w = unit_weight()
    assert weight_mass(w, 0, 1) == 1.0
    assert weight_mass(w, 0.25, 1) == 0.75


def test_power_weight_mass_closed_form():
    assert weight_mass(PowerWeight(-0.5), 0, 0.25) == pytest.approx(0.5, abs=1e-15)


def test_weight_mass_range():
    with pytest.raises(RangeError):
        weight_mass(unit_weight(), 0.5, 0.25)
    with pytest.raises(RangeError):
        weight_mass(unit_weight(), 0.0, 1.5)


@pytest.mark.parametrize("alpha", [-0.9, -0.5, -0.1, 0.0])
def test_power_weight_mass_matches_quadrature(alpha):
    w = PowerWeight(alpha)
    for a, b in [(0, 0.1), (0.1, 0.3), (0.3, 1.0), (0, 1)]:
        assert weight_mass(w, a, b) == pytest.approx(quad(w, a, b, limit=200)[0], rel=1e-8)


def test_piecewise_weight_mass_matches_quadrature(rng):
    for _ in range(50):
        w = random_piecewise_weight(rng)
        a, b = np.sort(rng.random(2))
        assert weight_mass(w, a, b) == pytest.approx(quad(w, a, b, points=w.breakpoints, limit=200)[0], rel=1e-12, abs=1e-15)


def test_power_weight_needs_alpha_above_minus_one():
    with pytest.raises(DomainError):
        PowerWeight(-1.0)


@pytest.mark.parametrize(
    "f, expected",
    [
        (build([("a", 1.0, 1.0)]), 1.0),
        (build([("a", 0.25, 3.0), ("b", 0.75, -1.0)]), 3.0**0.5),
    ],
)
def test_norm_examples_l2(f, expected):
    assert lorentz_norm(LorentzSpace(2), f) == pytest.approx(expected, abs=1e-15)


def test_norm_constant_in_power_weight_space():
    assert lorentz_norm(LorentzSpace(3, PowerWeight(-0.5)), build([("a", 1.0, 2.0)])) == pytest.approx(2.0, abs=1e-15)


def test_norm_with_unit_weight_is_lp(rng):
    for _ in range(100):
        f = random_function(rng)
        p = rng.uniform(1, 6)
        direct = np.sum(np.abs(f.values) ** p * f.measures) ** (1 / p)
        assert lorentz_norm(LorentzSpace(p), f) == pytest.approx(direct, rel=1e-13)


def test_norm_matches_quadrature_oracle(rng):
    for _ in range(60):
        space = random_space(rng)
        f = random_function(rng)
        assert lorentz_norm(space, f) == pytest.approx(quad_norm(space, f), rel=1e-8)


def test_validate_weight_flags():
    assert validate_weight(unit_weight()).valid
    assert validate_weight(PiecewiseConstantWeight([0.5], [1.0, 2.0])).violations == ["increasing", "not normalized"]
    assert "not positive" in validate_weight(PiecewiseConstantWeight([0.5], [2.0, 0.0])).violations
    rep = validate_weight(PiecewiseConstantWeight([0.5], [4.0, 2.0]))
    assert rep.admissible and not rep.valid
    assert "increasing" in validate_weight(PowerWeight(0.5)).violations


def test_space_rejects_bad_input():
    with pytest.raises(DomainError):
        LorentzSpace(0.5)
    with pytest.raises(DomainError):
        LorentzSpace(2, PiecewiseConstantWeight([0.5], [0.5, 1.5]))
    with pytest.raises(DomainError):
        LorentzSpace(2, PiecewiseConstantWeight([0.5], [4.0, 2.0]))
    LorentzSpace(2, PiecewiseConstantWeight([0.5], [4.0, 2.0]), normalized=False)


def test_normalized_scales_to_unit_mass():
    w = normalized(PiecewiseConstantWeight([0.5], [4.0, 2.0]))
    assert w.total == pytest.approx(1.0, abs=1e-15)
    assert validate_weight(w).valid


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 1.75, 2.0])
def test_counterexample_weight_admissible_for_small_p(p):
    assert validate_weight(counterexample_weight(p)).valid


def test_counterexample_weight_increasing_above_two():
    assert "increasing" in validate_weight(counterexample_weight(3.0)).violations


def test_lpq_weight_taken_literally():
    w = lpq_weight(2.0, 1.0)
    assert (w.alpha, w.scale) == (1.0, 0.5)
    assert "increasing" in validate_weight(w).violations
    assert validate_weight(lpq_weight(1.0, 2.0)).admissible


@pytest.mark.parametrize(
    "spec, check",
    [
        ("lp", lambda w: w.values.tolist() == [1.0]),
        ("pw:2@0.25,0.6666666666666666@0.75", lambda w: w.breakpoints.tolist() == [0.25]),
        ("pow:-0.5", lambda w: w.alpha == -0.5 and w.total == pytest.approx(1.0)),
        ("cex:1.5", lambda w: w.values.tolist() == counterexample_weight(1.5).values.tolist()),
    ],
)
def test_parse_weight_spec(spec, check):
    assert check(parse_weight_spec(spec))


@pytest.mark.parametrize(
    "spec, pos",
    [
        ("pw:1@0.5,x@0.5", "position 9"),
        ("pw:1@0.5,1@0.4", "add up"),
        ("pow:abc", "position 4"),
        ("pow:-2", "position 4"),
        ("bogus", "position 0"),
        ("zz:1", "position 0"),
    ],
)
def test_parse_weight_spec_errors(spec, pos):
    with pytest.raises(WeightSpecError, match=pos):
        parse_weight_spec(spec)


@given(spaces, simple_functions(), st.one_of(st.just(0.0), st.floats(1e-3, 50), st.floats(-50, -1e-3)))
@settings(max_examples=200, deadline=None)
def test_homogeneity(space, f, c):
    lhs = lorentz_norm(space, f.with_values(c * f.values))
    assert lhs == pytest.approx(abs(c) * lorentz_norm(space, f), rel=1e-12, abs=1e-300)


@given(spaces, simple_functions(), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_triangle_inequality(space, f, seed):
    g = f.with_values(np.random.default_rng(seed).normal(scale=20, size=len(f)))
    lhs = lorentz_norm(space, combine(1, f, 1, g))
    assert lhs <= (lorentz_norm(space, f) + lorentz_norm(space, g)) * (1 + 1e-12)


@given(spaces, simple_functions(), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_lattice_monotone(space, f, seed):
    grow = 1 + np.random.default_rng(seed).random(len(f))
    assert lorentz_norm(space, f) <= lorentz_norm(space, f.with_values(f.values * grow)) * (1 + 1e-14)


@given(spaces, simple_functions(), st.randoms(use_true_random=False))
@settings(max_examples=200, deadline=None)
def test_rearrangement_invariance(space, f, rnd):
    perm = list(range(len(f)))
    rnd.shuffle(perm)
    g = from_arrays(f.measures[perm], f.values[perm])
    assert lorentz_norm(space, g) == pytest.approx(lorentz_norm(space, f), rel=1e-12, abs=1e-300)


@given(spaces, st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_weight_mass_additive(space, a, b, c):
    a, b, c = sorted((a, b, c))
    w = space.weight
    assert weight_mass(w, a, c) == pytest.approx(weight_mass(w, a, b) + weight_mass(w, b, c), abs=1e-12)
