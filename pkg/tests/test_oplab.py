import numpy as np
import pytest

from pseudodaugavet.lorentz import LorentzSpace, PowerWeight, lorentz_norm
from pseudodaugavet.oplab import (
    DyadicGrid,
    OperatorMatrix,
    crude_upper_bound,
    embed,
    grid_norm,
    i_minus_a_report,
    identity,
    op_norm_estimate,
    rank_one_A,
)
from pseudodaugavet.stepfn import from_arrays
from pseudodaugavet.verify import rademacher_h, random_piecewise_weight

from .conftest import random_space


@pytest.mark.parametrize("n", [0, 1, 3, 12])
def test_grid_needs_power_of_two(n):
    with pytest.raises(ValueError):
        DyadicGrid(n)


def test_operator_shape_checked():
    with pytest.raises(ValueError):
        OperatorMatrix(DyadicGrid(4), np.eye(3))
    with pytest.raises(ValueError):
        OperatorMatrix(DyadicGrid(2), [[np.nan, 0], [0, 1]])


def test_averaging_projection():
    g = DyadicGrid(16)
    A = rank_one_A(g)
    assert np.allclose(A(np.ones(16)), 1.0, rtol=0, atol=1e-15)
    h = embed(rademacher_h(1.0, 2), g)
    assert np.allclose(A(h), 0.0, rtol=0, atol=1e-15)
    assert np.allclose((A @ A).entries, A.entries, rtol=0, atol=1e-14)


def test_embedding_preserves_norm(rng):
    g = DyadicGrid(64)
    for _ in range(100):
        k = int(rng.integers(1, 9))
        counts = rng.multinomial(64 - k, np.ones(k) / k) + 1
        counts = counts[: int(rng.integers(1, k + 1))]
        f = from_arrays(counts / 64, rng.normal(size=counts.size))
        space = random_space(rng)
        assert grid_norm(space, g, embed(f, g)) == pytest.approx(lorentz_norm(space, f), rel=1e-12)


def test_embed_rejects_off_grid():
    with pytest.raises(ValueError):
        embed(from_arrays([0.3], [1.0]), DyadicGrid(4))


def test_identity_and_zero():
    g = DyadicGrid(8)
    space = LorentzSpace(3, PowerWeight(-0.5))
    est, w = op_norm_estimate(space, identity(g), restarts=1)
    assert est == pytest.approx(1.0, abs=1e-12)
    est, _ = op_norm_estimate(space, OperatorMatrix(g, np.zeros((8, 8))), restarts=1)
    assert est == 0.0


def test_l2_i_minus_a():
    rep = i_minus_a_report(LorentzSpace(2), 16, restarts=4, seed=1)
    assert rep["estimate"] == pytest.approx(1.0, abs=1e-6)
    assert abs(rep["witness_mean"]) <= 1e-6
    assert rep["lower_bound_only"]


def test_estimate_between_indicator_and_crude_bounds(rng):
    g = DyadicGrid(8)
    for _ in range(10):
        space = random_space(rng)
        T = OperatorMatrix(g, rng.normal(size=(8, 8)))
        est, w = op_norm_estimate(space, T, restarts=2, seed=int(rng.integers(1000)))
        e = np.eye(8)
        lower = max(grid_norm(space, g, T(e[i])) / grid_norm(space, g, e[i]) for i in range(8))
        assert lower <= est <= crude_upper_bound(space, T) * (1 + 1e-12)
        assert est == pytest.approx(grid_norm(space, g, T(w)) / grid_norm(space, g, w), rel=1e-12)


def test_monotone_in_restarts():
    g = DyadicGrid(16)
    space = LorentzSpace(4, random_piecewise_weight(np.random.default_rng(5)))
    T = identity(g) - rank_one_A(g)
    ests = [op_norm_estimate(space, T, restarts=r, seed=3)[0] for r in (1, 2, 4)]
    assert ests[0] <= ests[1] <= ests[2]


def test_l4_above_one_small_grid():
    rep = i_minus_a_report(LorentzSpace(4), 16, restarts=4, seed=0)
    assert rep["estimate"] > 1.0
    assert rep["margin_over_1"] == rep["estimate"] - 1.0


def test_report_deterministic():
    a = i_minus_a_report(LorentzSpace(3), 8, restarts=2, seed=9)
    b = i_minus_a_report(LorentzSpace(3), 8, restarts=2, seed=9)
    assert a == b
