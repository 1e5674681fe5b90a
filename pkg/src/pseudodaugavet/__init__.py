"""Lorentz norms of simple functions and the quarter-split projection bound for ``p > 2``."""

from .constants import CaseConstants, case_constants, gamma_of
from .lorentz import (
    LorentzSpace,
    PiecewiseConstantWeight,
    PowerWeight,
    counterexample_weight,
    lorentz_norm,
    parse_weight_spec,
    validate_weight,
    weight_mass,
)
from .perturb import make_ddot, ratio_round, s_set
from .stepfn import SimpleFunction, build, combine, integral, rearrange, refine

__version__ = "0.1.0"

__all__ = [
    "CaseConstants",
    "case_constants",
    "gamma_of",
    "LorentzSpace",
    "PiecewiseConstantWeight",
    "PowerWeight",
    "counterexample_weight",
    "lorentz_norm",
    "parse_weight_spec",
    "validate_weight",
    "weight_mass",
    "make_ddot",
    "ratio_round",
    "s_set",
    "SimpleFunction",
    "build",
    "combine",
    "integral",
    "rearrange",
    "refine",
]
