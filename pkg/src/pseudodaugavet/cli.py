"""Command-line front end.

Exit status: 0 when every check in the report passes, 1 when a check
fails, 2 on usage or domain errors. Every report carries ``schema: 1`` and
the resolved configuration. ``PSEUDODAUGAVET_OUTPUT_DIR`` (optional) is
prepended to a relative ``--output`` path.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import oplab, perturb, verify
from .constants import case_constants
from .errors import PseudoDaugavetError
from .lorentz import LorentzSpace, lorentz_norm, parse_weight_spec
from .stepfn import build

DEFAULT_SEED = 20240531
SCHEMA = 1
OUTPUT_DIR_ENV = "PSEUDODAUGAVET_OUTPUT_DIR"

COMMANDS = ("constants", "norm", "perturb", "verify-case1", "counterexample", "end-to-end", "opnorm")


@dataclass
class RunConfig:
    command: str
    p: float = None
    weight_spec: str = "lp"
    trials: int = 100
    m_max: int = 8
    n: int = 64
    restarts: int = 32
    seed: int = DEFAULT_SEED
    output: str = "-"
    format: str = "json"
    delta: float = None
    cells: str = None
    step: float = 1e-3
    workers: int = 1


class UsageError(Exception):
    pass


def _parse_cells(text):
    """``v@m,v@m,...`` -> simple function with labels 0, 1, ..."""
    cells = []
    pos = 0
    for i, item in enumerate(text.split(",")):
        v, at, m = item.partition("@")
        try:
            if not at:
                raise ValueError
            cells.append((i, float(m), float(v)))
        except ValueError:
            raise UsageError(f"--cells {text!r}: expected value@measure at position {pos}") from None
        pos += len(item) + 1
    return build(cells)


def _space(cfg):
    return LorentzSpace(cfg.p, parse_weight_spec(cfg.weight_spec))


def _need(cfg, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"{cfg.command}: missing required option(s) " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _constants(cfg):
    _need(cfg, "p")
    c = case_constants(cfg.p)
    checks = c.invariant_checks()
    return {"constants": c.as_dict(), "checks": checks}, all(checks.values()), [c.as_dict()]


def _norm(cfg):
    _need(cfg, "p", "cells")
    f = _parse_cells(cfg.cells)
    space = _space(cfg)
    val = lorentz_norm(space, f)
    return {"norm": val, "norm_p": val**space.p}, True, [{"norm": val}]


def _perturb(cfg):
    _need(cfg, "delta", "cells")
    f = _parse_cells(cfg.cells)
    _, trace = perturb.make_ddot(f, cfg.delta)
    out = trace.as_dict()
    checks = {"ratio_exclusion": perturb.ratio_exclusion_holds(trace.final.values, cfg.delta)}
    if cfg.p is not None:
        space = _space(cfg)
        nx = lorentz_norm(space, f)
        nxx = lorentz_norm(space, trace.final)
        dist = lorentz_norm(space, trace.final.with_values(f.values - trace.final.values))
        out.update(norm_x=nx, norm_xddot=nxx, distance=dist)
        checks["norm_range"] = nx <= nxx < (1 + 1.5 * cfg.delta) * nx
        checks["distance"] = dist <= 1.5 * cfg.delta * nx
    out["checks"] = checks
    rows = [{"round": i, "rank": r.rank, "cell": r.cell, "s_set": " ".join(map(str, sorted(r.s_set)))} for i, r in enumerate(trace.rounds)]
    return out, all(checks.values()), rows


def _verify_case1(cfg):
    _need(cfg, "p")
    space = _space(cfg)
    consts = case_constants(cfg.p)
    rows = []
    for i in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, i])
        x = verify.random_simple_function(rng, space, cfg.m_max)
        xdd, _ = perturb.make_ddot(x, consts.delta_p)
        rep = verify.verify_case1(xdd, space, consts)
        rows.append({"trial": i, "lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds, "all_checks": rep.all_checks,
                     "psi1_0": rep.values["psi1_0"], "psi2_sup": rep.values["psi2_sup"]})
    passed = sum(r["holds"] and r["all_checks"] for r in rows)
    result = {"constants": consts.as_dict(), "trials": cfg.trials, "passed": passed, "per_trial": rows}
    return result, passed == cfg.trials, rows


def _counterexample(cfg):
    _need(cfg, "p")
    grid = np.round(np.arange(-2.0, 2.0 + cfg.step / 2, cfg.step), 12)
    rep = verify.counterexample_check(cfg.p, grid)
    ok = rep["holds"] and rep["closed_form_error"] <= 1e-12
    return rep, ok, [{k: v for k, v in rep.items() if not isinstance(v, list)}]


def _end_to_end(cfg):
    _need(cfg, "p")
    rep = verify.end_to_end(cfg.p, _space(cfg), cfg.trials, cfg.seed, cfg.m_max, workers=cfg.workers)
    rows = [
        {"trial": r["trial"], "m": r["m"], "passed": r["passed"], "lhs": r["lhs"], "rhs": r["rhs"],
         **{f"link_{k}": v for k, v in r["links"].items()}}
        for r in rep["per_trial"]
    ]
    return rep, rep["passed"] == rep["trials"], rows


def _opnorm(cfg):
    _need(cfg, "p")
    rep = oplab.i_minus_a_report(_space(cfg), cfg.n, cfg.restarts, cfg.seed)
    ok = rep["estimate"] >= 1.0 - 1e-6
    return rep, ok, [{k: v for k, v in rep.items() if not isinstance(v, list)}]


HANDLERS = {
    "constants": _constants,
    "norm": _norm,
    "perturb": _perturb,
    "verify-case1": _verify_case1,
    "counterexample": _counterexample,
    "end-to-end": _end_to_end,
    "opnorm": _opnorm,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def make_parser():
    parser = _Parser(prog="pseudodaugavet", description="Lorentz-space projection bounds at desk scale.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--p", type=float)
    parser.add_argument("--weight", dest="weight_spec", default="lp", help="lp | pw:v@m,... | pow:alpha | cex:p")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--m-max", dest="m_max", type=int, default=8)
    parser.add_argument("--n", type=int, default=64)
    parser.add_argument("--restarts", type=int, default=32)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--cells", help="simple function as value@measure,...")
    parser.add_argument("--step", type=float, default=1e-3, help="lambda grid step for counterexample")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--output", default="-")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _serialize(cfg, result, ok, rows):
    if cfg.format == "json":
        doc = {"schema": SCHEMA, "config": asdict(cfg), "passed": bool(ok), "result": result}
        return verify.report_json(doc) + "\n"
    buf = io.StringIO()
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf.write(f"# schema={SCHEMA} config={json.dumps(asdict(cfg), sort_keys=True)} passed={bool(ok)}\n")
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run(argv=None, stdout=None, stderr=None):
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        ns = make_parser().parse_args(argv)
        cfg = RunConfig(**vars(ns))
        result, ok, rows = HANDLERS[cfg.command](cfg)
    except (UsageError, PseudoDaugavetError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    text = _serialize(cfg, result, ok, rows)
    if cfg.output == "-":
        stdout.write(text)
    else:
        path = cfg.output
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not os.path.isabs(path):
            path = os.path.join(base, path)
        with open(path, "w") as fh:
            fh.write(text)
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
