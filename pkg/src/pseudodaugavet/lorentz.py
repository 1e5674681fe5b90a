"""Weights, their antiderivatives, and Lorentz norms of simple functions.

The Lorentz norm of ``f`` is ``(int_0^1 w(t) f*(t)^p dt)^(1/p)``. For a
simple function ``f*`` is a step function, so the integral reduces to a
finite sum of ``|a|^p * (W(t_{i+1}) - W(t_i))`` over rearrangement blocks.
Both weight families have closed-form antiderivatives ``W``; no quadrature
is used anywhere.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeError, WeightSpecError
from .stepfn import rearrange

NORMALIZATION_TOL = 1e-12

__all__ = [
    "PiecewiseConstantWeight",
    "PowerWeight",
    "WeightReport",
    "LorentzSpace",
    "unit_weight",
    "counterexample_weight",
    "lpq_weight",
    "normalized",
    "weight_mass",
    "lorentz_norm",
    "validate_weight",
    "parse_weight_spec",
]


class PiecewiseConstantWeight:
    """``w = values[i]`` on ``[knots[i], knots[i+1])`` with ``knots = [0, *breakpoints, 1]``.

    Construction only checks the shape of the data; admissibility as a
    Lorentz weight (positive, non-increasing) is reported by
    :func:`validate_weight`.
    """

    def __init__(self, breakpoints, values):
        breakpoints = np.asarray(breakpoints, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if values.size != breakpoints.size + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if breakpoints.size and (
            breakpoints[0] <= 0 or breakpoints[-1] >= 1 or np.any(np.diff(breakpoints) <= 0)
        ):
            raise ValueError("breakpoints must be strictly increasing inside (0, 1)")
        self.breakpoints = breakpoints
        self.values = values
        self.knots = np.concatenate(([0.0], breakpoints, [1.0]))
        self._cum = np.concatenate(([0.0], np.cumsum(values * np.diff(self.knots))))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.values.size - 1)
        return self.values[idx]

    def antiderivative(self, t):
        # np.interp is exact on a piecewise-linear function given its knots
        return np.interp(t, self.knots, self._cum)

    @property
    def total(self):
        return float(self._cum[-1])

    def scaled(self, c):
        return PiecewiseConstantWeight(self.breakpoints, c * self.values)

    def __repr__(self):
        return f"PiecewiseConstantWeight(breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()})"


class PowerWeight:
    """``w(t) = scale * t**alpha``; integrable for ``alpha > -1``."""

    def __init__(self, alpha, scale=None):
        alpha = float(alpha)
        if not alpha > -1:
            raise DomainError(f"power weight needs alpha > -1 to be integrable, got {alpha}")
        self.alpha = alpha
        self.scale = float(alpha + 1.0 if scale is None else scale)

    def __call__(self, t):
        return self.scale * np.asarray(t, dtype=float) ** self.alpha

    def antiderivative(self, t):
        return self.scale * np.asarray(t, dtype=float) ** (self.alpha + 1.0) / (self.alpha + 1.0)

    @property
    def total(self):
        return self.scale / (self.alpha + 1.0)

    def scaled(self, c):
        return PowerWeight(self.alpha, c * self.scale)

    def __repr__(self):
        return f"PowerWeight(alpha={self.alpha!r}, scale={self.scale!r})"


def unit_weight():
    """``w = 1``: the Lorentz norm becomes the ``L_p`` norm."""
    return PiecewiseConstantWeight([], [1.0])


def counterexample_weight(p):
    """Two-level weight making ``||lam*1 + (3 chi_B - chi_C)||`` minimal at ``lam = 0``.

    Values ``4/(3^(p-1)+1)`` on ``[0, 1/4)`` and ``4*3^(p-2)/(3^(p-1)+1)``
    on ``[1/4, 1]``; it is non-increasing only for ``p <= 2``.
    """
    q = 3.0 ** (p - 1.0)
    return PiecewiseConstantWeight([0.25], [4.0 / (q + 1.0), 4.0 * 3.0 ** (p - 2.0) / (q + 1.0)])


def lpq_weight(p, q):
    """Weight of the ``L_{p,q}`` scale, with the formula ``q t^(p/q-1) / p`` taken literally.

    Whether it is admissible (non-increasing) is left to :func:`validate_weight`.
    """
    return PowerWeight(p / q - 1.0, q / p)


def normalized(w):
    return w.scaled(1.0 / w.total)


def weight_mass(w, a, b):
    """``W(b) - W(a)`` for ``0 <= a <= b <= 1``."""
    a = float(a)
    b = float(b)
    if not (0.0 <= a <= b <= 1.0):
        raise RangeError(f"need 0 <= a <= b <= 1, got a={a!r}, b={b!r}")
    return float(w.antiderivative(b) - w.antiderivative(a))


def _masses(w, breakpoints):
    W = w.antiderivative(np.clip(breakpoints, 0.0, 1.0))
    return np.diff(W)


@dataclass(frozen=True)
class WeightReport:
    violations: list = field(default_factory=list)
    total: float = float("nan")
    values: list = field(default_factory=list)

    @property
    def admissible(self):
        """Positive, non-increasing and integrable (normalization not required)."""
        return not [v for v in self.violations if v != "not normalized"]

    @property
    def valid(self):
        return not self.violations

    def as_dict(self):
        return {
            "valid": self.valid,
            "admissible": self.admissible,
            "violations": list(self.violations),
            "total": self.total,
            "values": list(self.values),
        }


def validate_weight(w):
    """Report which Lorentz-weight constraints ``w`` violates. Never raises."""
    violations = []
    values = []
    if isinstance(w, PiecewiseConstantWeight):
        vals = w.values
        values = vals.tolist()
        if not np.all(np.isfinite(vals)):
            violations.append("not finite")
        if np.any(vals <= 0):
            violations.append("not positive")
        if np.any(np.diff(vals) > 0):
            violations.append("increasing")
    elif isinstance(w, PowerWeight):
        values = [w.alpha, w.scale]
        if not np.isfinite(w.scale) or not np.isfinite(w.alpha):
            violations.append("not finite")
        if w.scale <= 0:
            violations.append("not positive")
        if w.alpha > 0:
            violations.append("increasing")
    else:
        return WeightReport(["unknown weight type"])
    total = w.total
    if not np.isfinite(total):
        violations.append("infinite mass")
    elif abs(total - 1.0) > NORMALIZATION_TOL:
        violations.append("not normalized")
    return WeightReport(violations, float(total), values)


class LorentzSpace:
    """``L_{w,p}`` on [0, 1]; ``normalized`` enforces ``W(1) = 1``."""

    def __init__(self, p, weight=None, normalized=True):
        p = float(p)
        if not p >= 1:
            raise DomainError(f"Lorentz exponent must be >= 1, got {p}")
        weight = unit_weight() if weight is None else weight
        report = validate_weight(weight)
        if not report.admissible:
            raise DomainError(f"inadmissible weight {weight!r}: {', '.join(report.violations)}")
        if normalized and "not normalized" in report.violations:
            raise DomainError(f"weight has W(1) = {report.total!r}, expected 1")
        self.p = p
        self.weight = weight
        self.normalized = normalized

    def norm(self, f):
        return lorentz_norm(self, f)

    def __repr__(self):
        return f"LorentzSpace(p={self.p!r}, weight={self.weight!r})"


def profile_norm_p(space, magnitudes, measures):
    """``||f||^p`` from rearrangement blocks (magnitudes non-increasing)."""
    t = np.concatenate(([0.0], np.cumsum(measures)))
    return float(np.sum(np.asarray(magnitudes) ** space.p * _masses(space.weight, t)))


def lorentz_norm(space, f):
    prof = rearrange(f)
    return profile_norm_p(space, prof.magnitudes, prof.measures) ** (1.0 / space.p)


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _number(text, pos, spec):
    m = re.fullmatch(_NUM, text)
    if not m:
        raise WeightSpecError(f"weight spec {spec!r}: expected a number at position {pos}, got {text!r}")
    return float(text)


def parse_weight_spec(spec):
    """Parse ``lp``, ``pw:v1@m1,v2@m2,...``, ``pow:alpha`` or ``cex:p``.

    ``pw`` spans are consecutive from 0 and must add up to 1. ``pow``
    weights get the scale that makes ``W(1) = 1``.
    """
    spec = spec.strip()
    if spec == "lp":
        return unit_weight()
    kind, sep, body = spec.partition(":")
    if not sep:
        raise WeightSpecError(f"weight spec {spec!r}: unknown form at position 0 (expected lp, pw:, pow:, cex:)")
    start = len(kind) + 1
    if kind == "pow":
        alpha = _number(body, start, spec)
        if not alpha > -1:
            raise WeightSpecError(f"weight spec {spec!r}: alpha must be > -1 at position {start}")
        return PowerWeight(alpha)
    if kind == "cex":
        return counterexample_weight(_number(body, start, spec))
    if kind == "pw":
        values, spans = [], []
        pos = start
        for item in body.split(","):
            v, at, m = item.partition("@")
            if not at:
                raise WeightSpecError(f"weight spec {spec!r}: expected value@measure at position {pos}")
            values.append(_number(v, pos, spec))
            spans.append(_number(m, pos + len(v) + 1, spec))
            if spans[-1] <= 0:
                raise WeightSpecError(f"weight spec {spec!r}: span must be > 0 at position {pos + len(v) + 1}")
            pos += len(item) + 1
        edges = np.cumsum(spans)
        if abs(edges[-1] - 1.0) > 1e-12:
            raise WeightSpecError(f"weight spec {spec!r}: spans add up to {edges[-1]!r}, expected 1")
        return PiecewiseConstantWeight(edges[:-1], values)
    raise WeightSpecError(f"weight spec {spec!r}: unknown kind {kind!r} at position 0")
