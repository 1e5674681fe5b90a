"""Constants of the quarter-split contraction for ``p > 2``.

``C_p`` bounds the slope ``psi'(0)`` from below, ``M_p`` bounds
``|psi''|`` from above, and the rest follow:

    D_p     = C_p / (8 * 3^p * p)
    delta_p = min(1/8, 4 C_p / M_p, 8 D_p)
    lambda_p = -delta_p / 4
    gamma_p = (1 - delta_p * p * D_p)^(1/p)
    rho_p   = 1 / (gamma_p + delta_p * |lambda_p| / 2)

``rho_p`` is the projection-norm lower bound. Near ``p = 2`` its margin
above 1 is a few times 1e-12, so comparisons are plain float64 with no
tolerance added.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError

__all__ = ["CaseConstants", "case_constants", "gamma_of", "delta_sweep", "slope_constant", "curvature_constant"]


@dataclass(frozen=True)
class CaseConstants:
    p: float
    C_p: float
    M_p: float
    D_p: float
    delta_p: float
    lambda_p: float
    gamma_p: float
    rho_p: float

    def invariant_checks(self):
        d, lam, g = self.delta_p, self.lambda_p, self.gamma_p
        return {
            "C_p > 0": self.C_p > 0,
            "M_p > 0": self.M_p > 0,
            "D_p > 0": self.D_p > 0,
            "delta_p in (0, 1/8]": 0 < d <= 0.125,
            "lambda_p = -delta_p/4": lam == -d / 4,
            "lambda_p in (delta_p/(delta_p-4), 0)": d / (d - 4) < lam < 0,
            "|lambda_p| <= C_p/M_p": abs(lam) <= self.C_p / self.M_p,
            "gamma_p in (0, 1)": 0 < g < 1,
            "gamma_p + delta_p|lambda_p|/2 < 1": g + 0.5 * d * abs(lam) < 1,
            "rho_p > 1": self.rho_p > 1,
        }

    def satisfies_invariants(self):
        return all(self.invariant_checks().values())

    def as_dict(self):
        return asdict(self)


def slope_constant(p):
    """``C_p = p (3^(p-1) - 3) / 4``."""
    return 0.25 * p * (3.0 ** (p - 1.0) - 3.0)


def curvature_constant(p):
    """``M_p = p (p-1) 4^p``."""
    return p * (p - 1.0) * 4.0 ** p


def _check_p(p):
    p = float(p)
    if not p > 2:
        raise DomainError(f"the contraction constants need p > 2 (C_p = {slope_constant(p)!r}), got p = {p}")
    return p


def _gamma(p, delta, C):
    return (1.0 - delta * C / (8.0 * 3.0 ** p)) ** (1.0 / p)


def gamma_of(p, delta):
    """Contraction factor ``(1 - delta C_p / (8 3^p))^(1/p)`` for an admissible ``delta``."""
    p = _check_p(p)
    C, M = slope_constant(p), curvature_constant(p)
    if not 0 <= delta <= min(0.125, 4 * C / M):
        raise DomainError(f"delta must lie in [0, min(1/8, 4C_p/M_p)] = [0, {min(0.125, 4 * C / M)!r}], got {delta!r}")
    return _gamma(p, delta, C)


def case_constants(p):
    p = _check_p(p)
    C = slope_constant(p)
    M = curvature_constant(p)
    D = C / (8.0 * 3.0 ** p * p)
    D_closed = (3.0 ** (p - 2.0) - 1.0) / (32.0 * 3.0 ** (p - 1.0))
    assert np.isclose(D, D_closed, rtol=1e-12, atol=0), (D, D_closed)
    delta = min(0.125, 4.0 * C / M, 8.0 * D)
    lam = -delta / 4.0
    gamma = (1.0 - delta * p * D) ** (1.0 / p)
    # the two printed forms of gamma_p agree up to rounding
    assert np.isclose(gamma, _gamma(p, delta, C), rtol=1e-15, atol=0)
    rho = 1.0 / (gamma + 0.5 * delta * abs(lam))
    return CaseConstants(p, C, M, D, delta, lam, gamma, rho)


def delta_sweep(p, num=257):
    """Exploratory report of ``gamma(delta) + delta^2/8`` over admissible ``delta``.

    Not part of the constant derivation: ``delta_p`` is not claimed to be
    optimal, and this shows how ``1 / (gamma + delta^2/8)`` moves when
    another ``delta`` in ``(0, min(1/8, 4 C_p/M_p)]`` is used.
    """
    consts = case_constants(p)
    hi = min(0.125, 4 * consts.C_p / consts.M_p)
    deltas = np.linspace(hi / num, hi, num)
    vals = np.array([_gamma(consts.p, d, consts.C_p) + d * d / 8 for d in deltas])
    best = int(np.argmin(vals))
    return {
        "label": "exploratory sweep, not the derived constant",
        "p": consts.p,
        "deltas": deltas.tolist(),
        "objective": vals.tolist(),
        "best_delta": float(deltas[best]),
        "best_bound": float(1.0 / vals[best]),
        "delta_p": consts.delta_p,
        "rho_p": consts.rho_p,
    }
