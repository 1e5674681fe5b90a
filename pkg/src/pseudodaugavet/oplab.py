"""Operators on the ``n``-cell dyadic grid and numeric operator-norm estimates.

A vector ``v`` of length ``n`` stands for the step function equal to
``v[i]`` on the ``i``-th cell of measure ``1/n``. Because all cells have
the same measure, the Lorentz norm is ``(sum_r |v|_(r)^p m_r)^(1/p)`` with
``|v|_(r)`` sorted decreasingly and ``m_r = W((r+1)/n) - W(r/n)`` fixed.

The estimate of ``||T||`` is a maximum of ``||Tv|| / ||v||`` over a
collection of local ascents. It is always the ratio at the returned
witness, hence a lower bound on the true norm.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar


__all__ = [
    "DyadicGrid",
    "OperatorMatrix",
    "rank_one_A",
    "identity",
    "embed",
    "grid_norm",
    "op_norm_estimate",
    "crude_upper_bound",
    "i_minus_a_report",
]

STARTS_PER_RESTART = 8


@dataclass(frozen=True)
class DyadicGrid:
    n: int

    def __post_init__(self):
        n = self.n
        if not (isinstance(n, (int, np.integer)) and n >= 2 and n & (n - 1) == 0):
            raise ValueError(f"grid size must be a power of two >= 2, got {n!r}")

    @property
    def cell_measure(self):
        return 1.0 / self.n


@dataclass(frozen=True)
class OperatorMatrix:
    grid: DyadicGrid
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"entries must be {self.grid.n}x{self.grid.n}, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("entries must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def __call__(self, v):
        return self.entries @ v

    def __matmul__(self, other):
        return OperatorMatrix(self.grid, self.entries @ other.entries)

    def __sub__(self, other):
        return OperatorMatrix(self.grid, self.entries - other.entries)


def rank_one_A(grid):
    """Averaging projection ``(Ax)_i = mean(x)``."""
    return OperatorMatrix(grid, np.full((grid.n, grid.n), 1.0 / grid.n))


def identity(grid):
    return OperatorMatrix(grid, np.eye(grid.n))


def embed(f, grid):
    """Cell vector of a simple function whose measures are multiples of ``1/n``.

    Cells beyond the support of ``f`` are zero.
    """
    counts = f.measures * grid.n
    k = np.rint(counts).astype(int)
    if np.any(np.abs(counts - k) > 1e-9) or np.any(k < 1) or k.sum() > grid.n:
        raise ValueError("cell measures are not multiples of the grid cell measure")
    v = np.zeros(grid.n)
    v[: k.sum()] = np.repeat(f.values, k)
    return v


class _Norm:
    """Fast Lorentz norm and gradient on equal-measure cells."""

    def __init__(self, space, grid):
        edges = np.linspace(0.0, 1.0, grid.n + 1)
        self.masses = np.diff(space.weight.antiderivative(edges))
        self.p = space.p

    def pow(self, v):
        a = np.sort(np.abs(v))[::-1]
        return float(np.dot(a**self.p, self.masses))

    def __call__(self, v):
        return self.pow(v) ** (1.0 / self.p)

    def log_grad(self, v):
        """Gradient of ``log ||v||``."""
        a = np.abs(v)
        order = np.argsort(-a, kind="stable")
        m = np.empty_like(a)
        m[order] = self.masses
        s = float(np.dot(a[order] ** self.p, self.masses))
        return np.sign(v) * a ** (self.p - 1) * m / s


def grid_norm(space, grid, v):
    return _Norm(space, grid)(np.asarray(v, dtype=float))


def _ratio(norm, T, v):
    nv = norm(v)
    return norm(T @ v) / nv if nv > 0 else 0.0


def _lbfgs(norm, T, v0):
    def obj(v):
        u = T @ v
        nu, nv = norm.pow(u), norm.pow(v)
        if nu <= 0 or nv <= 0:
            return 0.0, np.zeros_like(v)
        val = (np.log(nv) - np.log(nu)) / norm.p
        return val, norm.log_grad(v) - T.T @ norm.log_grad(u)

    res = minimize(obj, v0, jac=True, method="L-BFGS-B", options={"maxiter": 500, "gtol": 1e-13, "ftol": 0.0})
    v = res.x
    return v if _ratio(norm, T, v) >= _ratio(norm, T, v0) else v0


def _coordinate_polish(norm, T, v, tol, max_sweeps=20):
    """Golden-section-type line search along each coordinate until the sweep gain drops below ``tol``."""
    v = v / np.max(np.abs(v))
    best = _ratio(norm, T, v)
    for _ in range(max_sweeps):
        start = best
        for i in range(v.size):
            def neg(s, i=i):
                w = v.copy()
                w[i] = s
                return -_ratio(norm, T, w)

            r = minimize_scalar(neg, bounds=(v[i] - 1.0, v[i] + 1.0), method="bounded", options={"xatol": 1e-10})
            if -r.fun > best:
                v = v.copy()
                v[i] = r.x
                best = -r.fun
        if best - start <= tol * start:
            break
    return v, best


def _restart(norm, T, seed, index, tol):
    rng = np.random.default_rng([seed, index])
    best_v, best = None, -1.0
    for _ in range(STARTS_PER_RESTART):
        v = _lbfgs(norm, T, rng.standard_normal(T.shape[0]))
        r = _ratio(norm, T, v)
        if r > best:
            best_v, best = v, r
    return _coordinate_polish(norm, T, best_v, tol)


def op_norm_estimate(space, T, restarts=4, tol=1e-8, seed=0):
    """Lower-bound estimate of ``||T||`` on ``L_{w,p}`` restricted to the grid.

    Candidates are every cell indicator plus, per restart, the best of
    ``STARTS_PER_RESTART`` L-BFGS ascents from Gaussian starts refined by
    coordinate line searches. Restart ``r`` uses the stream
    ``(seed, r)``, so the estimate never decreases as ``restarts`` grows.

    Returns ``(estimate, witness)`` with ``estimate`` the ratio at ``witness``.
    """
    grid = T.grid
    norm = _Norm(space, grid)
    E = T.entries
    if not np.any(E):
        return 0.0, np.eye(grid.n)[0]
    best_v, best = None, -1.0
    for i in range(grid.n):
        e = np.zeros(grid.n)
        e[i] = 1.0
        r = _ratio(norm, E, e)
        if r > best:
            best_v, best = e, r
    for k in range(int(restarts)):
        v, r = _restart(norm, E, int(seed), k, tol)
        if r > best:
            best_v, best = v, r
    witness = best_v / norm(best_v)
    return _ratio(norm, E, witness), witness


def crude_upper_bound(space, T):
    """``sum_j ||T e_j|| / ||e_j||``, valid in any lattice norm since ``|x_j| ||e_j|| <= ||x||``."""
    norm = _Norm(space, T.grid)
    e = np.eye(T.grid.n)
    return float(sum(norm(T.entries @ e[j]) / norm(e[j]) for j in range(T.grid.n)))


def i_minus_a_report(space, n, restarts=32, seed=0, tol=1e-8):
    grid = DyadicGrid(n)
    T = identity(grid) - rank_one_A(grid)
    est, witness = op_norm_estimate(space, T, restarts=restarts, tol=tol, seed=seed)
    return {
        "p": space.p,
        "weight": repr(space.weight),
        "n": n,
        "restarts": restarts,
        "seed": seed,
        "estimate": est,
        "margin_over_1": est - 1.0,
        "crude_upper_bound": crude_upper_bound(space, T),
        "witness": witness.tolist(),
        "witness_mean": float(witness.mean()),
        "lower_bound_only": True,
    }
