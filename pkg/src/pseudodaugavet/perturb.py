"""Coefficient perturbations that push modulus ratios out of ``(3 - delta, 3)``.

Two stages:

1. :func:`ratio_round` snaps moduli to a few levels whose pairwise ratios
   avoid ``(1, 1 + eta)``; every coefficient grows by a factor in
   ``[1, 1 + eta)`` and keeps its sign.
2. :func:`make_ddot` runs the bump induction on top of that with
   ``1 + eta = (3 / (3 - delta))**3``. Each round takes the smallest-modulus
   position ``k`` whose bad set ``S(k)`` is non-empty and raises every
   member of ``S(k)`` to exactly ``3 |a_k|``.

Cells are identified by their 0-based position in the function's
partition. Inside the induction, ``rank`` refers to the position in the
stable descending-modulus order of the rounded coefficients; the ranks of
the bumped positions strictly decrease from round to round.

Open-interval membership is tested as ``(3 - delta) |d_k| < |d_j| < 3 |d_k|``
with no padding, the same product the bump step assigns, so a bumped
coefficient sits exactly on the excluded endpoint.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DeltaOutOfRange,
    IndexOutOfRange,
    NonPositiveEta,
    RatioOutOfRange,
    ZeroCoefficient,
)

FRAGILE_RTOL = 1e-13

__all__ = [
    "BumpRound",
    "PerturbTrace",
    "ratio_round",
    "s_set",
    "bad_pairs",
    "ratio_exclusion_holds",
    "make_ddot",
    "eta_for_delta",
    "close_check",
    "random_close_witness",
    "close_search",
]


def _moduli(f):
    mods = np.abs(np.asarray(f.values, dtype=float))
    if np.any(mods == 0):
        raise ZeroCoefficient("all coefficients must be nonzero; drop zero cells first")
    return mods


def ratio_round(f, eta):
    """Round moduli so that no two ratios fall in ``(1, 1 + eta)``.

    Moduli are visited in descending order. The largest unvisited modulus
    anchors a group that takes in every following modulus ``a`` with
    ``anchor / a < 1 + eta``; all members are replaced by
    ``sign(a) * anchor``.
    """
    if not eta > 0:
        raise NonPositiveEta(f"eta must be > 0, got {eta!r}")
    mods = _moduli(f)
    order = np.argsort(-mods, kind="stable")
    out = np.empty_like(mods)
    m = mods.size
    i = 0
    while i < m:
        anchor = mods[order[i]]
        j = i + 1
        while j < m and anchor / mods[order[j]] < 1.0 + eta:
            j += 1
        out[order[i:j]] = anchor
        i = j
    return f.with_values(np.sign(f.values) * out)


def _in_band(num, den, delta):
    return ((3.0 - delta) * den < num) & (num < 3.0 * den)


def s_set(f, k, delta):
    """Cells ``j`` with ``|d_j| / |d_k|`` strictly inside ``(3 - delta, 3)``."""
    if not 0 < delta < 3:
        raise DeltaOutOfRange(f"delta must lie in (0, 3), got {delta!r}")
    mods = _moduli(f)
    if not 0 <= k < mods.size:
        raise IndexOutOfRange(f"cell index {k} out of range for {mods.size} cells")
    return frozenset(np.flatnonzero(_in_band(mods, mods[k], delta)).tolist())


def bad_pairs(values, delta):
    """All ``(j, k)`` with ``|v_j| / |v_k|`` in ``(3 - delta, 3)``."""
    mods = np.abs(np.asarray(values, dtype=float))
    mask = _in_band(mods[:, None], mods[None, :], delta)
    return [tuple(ix) for ix in np.argwhere(mask).tolist()]


def ratio_exclusion_holds(values, delta):
    return not bad_pairs(values, delta)


def eta_for_delta(delta):
    return (3.0 / (3.0 - delta)) ** 3 - 1.0


def _fragile_pairs(mods, delta):
    ratio = mods[:, None] / mods[None, :]
    near = np.zeros_like(ratio, dtype=bool)
    for edge in (3.0 - delta, 3.0):
        near |= np.abs(ratio - edge) <= FRAGILE_RTOL * edge
    # a bumped coefficient sits exactly on 3 by construction
    near &= ratio != 3.0
    return [tuple(ix) for ix in np.argwhere(near).tolist()]


@dataclass(frozen=True)
class BumpRound:
    rank: int
    cell: int
    s_set: frozenset
    values: tuple


@dataclass(frozen=True)
class PerturbTrace:
    delta: float
    eta: float
    step1: object
    order: tuple
    rounds: list = field(default_factory=list)
    final: object = None
    fragile: list = field(default_factory=list)

    def as_dict(self):
        return {
            "delta": self.delta,
            "eta": self.eta,
            "step1_values": self.step1.values.tolist(),
            "order": list(self.order),
            "rounds": [
                {"rank": r.rank, "cell": r.cell, "s_set": sorted(r.s_set), "values": list(r.values)}
                for r in self.rounds
            ],
            "final_values": self.final.values.tolist(),
            "fragile_pairs": [list(p) for p in self.fragile],
        }


def make_ddot(f, delta):
    """Perturb ``f`` so that no modulus ratio lies in ``(3 - delta, 3)``.

    Returns ``(xddot, trace)``. Signs are preserved and every coefficient
    grows by a factor in ``[1, 1 + eta) * [1, 3/(3 - delta))``, so in any
    rearrangement-invariant norm ``||f|| <= ||xddot|| < (1 + 1.5 delta) ||f||``
    and ``||f - xddot|| <= 1.5 delta ||f||``.
    """
    if not 0 < delta < 0.125:
        raise DeltaOutOfRange(f"delta must lie in (0, 1/8), got {delta!r}")
    mods0 = _moduli(f)
    eta = eta_for_delta(delta)
    xdot = ratio_round(f, eta)
    base = np.abs(xdot.values)
    order = np.argsort(-base, kind="stable")
    m = base.size

    cur = base[order].copy()
    sgn = np.sign(xdot.values[order])

    def top_rank(cur):
        hit = _in_band(cur[:, None], cur[None, :], delta).any(axis=0)
        nz = np.flatnonzero(hit)
        return int(nz[-1]) if nz.size else -1

    rounds = []
    k = top_rank(cur)
    while k >= 0:
        members = np.flatnonzero(_in_band(cur, cur[k], delta))
        cur[members] = 3.0 * cur[k]
        vals = np.empty(m)
        vals[order] = sgn * cur
        rounds.append(BumpRound(k, int(order[k]), frozenset(order[members].tolist()), tuple(vals.tolist())))
        k_next = top_rank(cur)
        if not k_next < k:
            raise RuntimeError(f"bump ranks did not decrease ({k} -> {k_next})")
        k = k_next
    assert len(rounds) <= m + 1

    out = np.empty(m)
    out[order] = sgn * cur
    xddot = f.with_values(out)

    mods = np.abs(out)
    assert ratio_exclusion_holds(out, delta)
    assert np.all(np.sign(out) == np.sign(f.values))
    step = base / mods0
    bump = mods / base
    assert np.all((step >= 1) & (step < 1 + eta)), step
    assert np.all((bump >= 1) & (bump < 3.0 / (3.0 - delta))), bump

    trace = PerturbTrace(
        delta=float(delta),
        eta=float(eta),
        step1=xdot,
        order=tuple(order.tolist()),
        rounds=rounds,
        final=xddot,
        fragile=_fragile_pairs(mods, delta),
    )
    return xddot, trace


_CLOSE_ARITY = {"i": 4, "ii": 3, "iii": 2, "iv": 3}


def _open(x, lo, hi):
    return lo < x < hi


def close_check(delta, case, t, t_tilde):
    """Evaluate one of the four ratio implications on concrete witnesses.

    Every pair must satisfy ``t_tilde[i] / t[i]`` in ``[1, 3/(3 - delta))``.
    Returns ``True`` when the implication holds, i.e. the hypothesis is
    false or the conclusion is true. Indices follow the usual 1-based
    naming, so ``t[0]`` is ``t_1``.
    """
    hyp, concl = _close_eval(delta, case, t, t_tilde)
    return (not hyp) or concl


def _close_eval(delta, case, t, t_tilde):
    if case not in _CLOSE_ARITY:
        raise ValueError(f"case must be one of {sorted(_CLOSE_ARITY)}, got {case!r}")
    if not 0 < delta < 3:
        raise DeltaOutOfRange(f"delta must lie in (0, 3), got {delta!r}")
    n = _CLOSE_ARITY[case]
    if len(t) < n or len(t_tilde) < n:
        raise ValueError(f"case {case} needs {n} witnesses")
    t = [float(v) for v in t]
    tt = [float(v) for v in t_tilde]
    upper = 3.0 / (3.0 - delta)
    for a, b in zip(t, tt):
        if not (a > 0 and b > 0):
            raise RatioOutOfRange("witnesses must be positive")
        if not 1.0 <= b / a < upper:
            raise RatioOutOfRange(f"t_tilde/t = {b / a!r} outside [1, {upper!r})")
    lo, hi = 3.0 - delta, 3.0
    eq = lambda a, b: math.isclose(a, b, rel_tol=1e-14, abs_tol=0.0)  # noqa: E731
    if case == "i":
        hyp = eq(t[0], t[1]) and _open(tt[0] / tt[2], lo, hi) and _open(tt[1] / tt[3], lo, hi)
        concl = _open(t[2] / t[3], (3 - delta) ** 3 / 27, 27 / (3 - delta) ** 3)
    elif case == "ii":
        hyp = _open(t[0] / t[1], lo, hi) and eq(t[2] / t[1], 3.0)
        concl = _open(t[2] / t[0], 1.0, upper)
    elif case == "iii":
        hyp = t[0] < t[1]
        concl = tt[0] / tt[1] < 9 / (3 - delta) ** 2
    else:
        hyp = eq(t[0] / tt[1], 3.0) and _open(t[0] / tt[2], lo, hi)
        concl = _open(t[1] / t[2], (3 - delta) ** 2 / 9, upper)
    return hyp, concl


def _inside(rng, lo, hi, size=None, pad=1e-12):
    span = hi - lo
    return rng.uniform(lo + pad * span, hi - pad * span, size)


def random_close_witness(rng, delta, case):
    """Draw ``(t, t_tilde)`` that satisfies the hypothesis of ``case``."""
    upper = 3.0 / (3.0 - delta)
    u = _inside(rng, 1.0, upper, 4)
    r = _inside(rng, 3.0 - delta, 3.0, 2)
    s = float(np.exp(rng.uniform(-3, 3)))
    if case == "i":
        t1 = t2 = s
        tt1, tt2 = t1 * u[0], t2 * u[1]
        tt3, tt4 = tt1 / r[0], tt2 / r[1]
        t = [t1, t2, tt3 / u[2], tt4 / u[3]]
        tt = [tt1, tt2, tt3, tt4]
    elif case == "ii":
        t2 = s
        t = [t2 * r[0], t2, 3.0 * t2]
        tt = [v * w for v, w in zip(t, u)]
    elif case == "iii":
        t1 = s
        t = [t1, t1 * float(np.exp(_inside(rng, 0.0, 2.0)))]
        tt = [v * w for v, w in zip(t, u)]
    elif case == "iv":
        t1 = s
        tt2, tt3 = t1 / 3.0, t1 / r[0]
        t = [t1, tt2 / u[1], tt3 / u[2]]
        tt = [t1 * u[0], tt2, tt3]
    else:
        raise ValueError(f"unknown case {case!r}")
    return t, tt


def close_search(delta, case, n, rng):
    """Randomized falsification search; returns counts and the first counterexample."""
    hyp_ok = 0
    failures = 0
    first = None
    for _ in range(n):
        t, tt = random_close_witness(rng, delta, case)
        hyp, concl = _close_eval(delta, case, t, tt)
        hyp_ok += hyp
        if hyp and not concl:
            failures += 1
            if first is None:
                first = {"t": t, "t_tilde": tt}
    return {"case": case, "delta": float(delta), "witnesses": n, "hypothesis_met": hyp_ok, "counterexamples": failures, "first": first}
