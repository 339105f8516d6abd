"""``dfx`` command-line front end.

Defaults (one table, overridable by ``--config`` JSON and then by flags):

    ========  ==============================  ===========================
    key       default                         used by
    ========  ==============================  ===========================
    tol       1e-6                            worm-index, sweep, riccati, psh (bisection)
    grid      256x16 (n_r x n_phi)            criterion, psh
    theta     pi/2                            criterion, psh, riccati
    depths    1e-2,3e-3,1e-3,3e-4,1e-4        psh
    beta_min  0.6 pi                          sweep
    beta_max  4 pi                            sweep
    steps     20                              sweep
    t0, t1    1, 2                            riccati
    step      1e-4                            riccati
    seed      0                               validate, psh (ball)
    ========  ==============================  ===========================

Exit codes: 0 success or feasible, 1 mathematical failure or infeasibility,
2 usage or configuration error.

CSV headers:

    sweep      beta,alpha_max,index_computed,index_predicted,abs_err
    criterion  r,phi,value
    riccati    t,s_closed,s_numeric,abs_err
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calculus import EvaluationError, PreconditionError
from .criterion import FEASIBILITY_SLACK, InfeasibleError, alpha_from_eta, criterion_worm, zero_weight
from .domains import CATALOG, WormParams, validate_defining
from .psh import PSH_DEPTHS, check_psh_grid, default_samples
from .riccati import (
    PoleError,
    RiccatiParams,
    StrictMarginBuilder,
    build_psi_radial,
    closed_form,
    eta_from_alpha,
    integrate,
    max_alpha,
)

log = logging.getLogger("dfx")

DEFAULTS = {
    "domain": "worm",
    "beta": None,
    "cutoff": None,
    "alpha": None,
    "eta": None,
    "theta": math.pi / 2,
    "tol": 1e-6,
    "grid": (256, 16),
    "depths": PSH_DEPTHS,
    "beta_min": 0.6 * math.pi,
    "beta_max": 4 * math.pi,
    "steps": 20,
    "a": None,
    "b": None,
    "t0": 1.0,
    "t1": 2.0,
    "step": 1e-4,
    "seed": 0,
    "samples": 100,
    "out": None,
}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    domain: str = "worm"
    beta: Optional[float] = None
    cutoff: Optional[float] = None
    alpha: Optional[float] = None
    eta: Optional[float] = None
    theta: float = math.pi / 2
    tol: float = 1e-6
    grid: tuple = (256, 16)
    depths: tuple = PSH_DEPTHS
    beta_min: float = 0.6 * math.pi
    beta_max: float = 4 * math.pi
    steps: int = 20
    a: Optional[float] = None
    b: Optional[float] = None
    t0: float = 1.0
    t1: float = 2.0
    step: float = 1e-4
    seed: int = 0
    samples: int = 100
    out: Optional[str] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise UsageError("tol must be positive")
        if len(self.grid) != 2 or min(self.grid) < 1 or self.grid[0] < 2:
            raise UsageError(f"grid must be NxM with N >= 2 and M >= 1, got {self.grid}")
        if self.domain not in CATALOG:
            raise UsageError(f"unknown domain {self.domain!r}; choose from {sorted(CATALOG)}")
        for name in ("beta", "beta_min", "beta_max"):
            v = getattr(self, name)
            if v is not None and not v > math.pi / 2:
                raise UsageError(f"{name} must exceed pi/2, got {v}")
        if any(not t > 0 for t in self.depths):
            raise UsageError("depths must be positive")

    def worm(self) -> WormParams:
        if self.beta is None:
            raise UsageError(f"{self.command} needs --beta")
        try:
            return WormParams(self.beta, self.cutoff)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


def parse_grid(text) -> tuple:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).lower().split("x")
    try:
        vals = [int(x) for x in parts]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}; expected N or NxM") from exc
    if len(vals) == 1:
        vals.append(DEFAULTS["grid"][1])
    if len(vals) != 2:
        raise UsageError(f"bad grid {text!r}; expected N or NxM")
    return tuple(vals)


def parse_depths(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"bad depth list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with keys mirroring the flags")
    common.add_argument("--domain", choices=sorted(CATALOG))
    common.add_argument("--beta", type=float)
    common.add_argument("--cutoff", type=float, help="worm cutoff knee a (default beta - pi/2 + 1)")
    common.add_argument("--alpha", type=float)
    common.add_argument("--eta", type=float)
    common.add_argument("--theta", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--grid", help="N or NxM")
    common.add_argument("--depths", help="comma-separated list")
    common.add_argument("--out", help="output path (CSV or JSON)")
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(prog="dfx", description="Diederich-Fornaess index laboratory")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("worm-index", parents=[common], help="index of the beta-worm")
    s = sub.add_parser("sweep", parents=[common], help="index over a uniform beta grid")
    s.add_argument("--beta-min", type=float)
    s.add_argument("--beta-max", type=float)
    s.add_argument("--steps", type=int)
    sub.add_parser("criterion", parents=[common], help="worm criterion for a radial weight over the Levi-flat grid")
    sub.add_parser("psh", parents=[common], help="sampled plurisubharmonicity check")
    r = sub.add_parser("riccati", parents=[common], help="integrated vs closed-form Riccati solution")
    r.add_argument("--a", type=float)
    r.add_argument("--b", type=float)
    r.add_argument("--t0", type=float)
    r.add_argument("--t1", type=float)
    r.add_argument("--step", type=float)
    v = sub.add_parser("validate", parents=[common], help="defining-function self-checks")
    v.add_argument("--samples", type=int)
    return p


def make_config(ns: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS)
    if ns.config:
        try:
            with open(ns.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        unknown = set(loaded) - set(values)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key, val in vars(ns).items():
        if key in values and val is not None:
            values[key] = val
    values["grid"] = parse_grid(values["grid"])
    values["depths"] = parse_depths(values["depths"])
    return RunConfig(command=ns.command, **values)


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(header, rows, path: Optional[str]) -> bool:
    """Write rows; returns True when the CSV went to stdout."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(buf.getvalue())
        return False
    sys.stdout.write(buf.getvalue())
    return True


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def emit_summary(summary: dict, to_stderr: bool = False, path: Optional[str] = None):
    text = json.dumps(summary, sort_keys=True, default=_plain)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text, file=sys.stderr if to_stderr else sys.stdout)


def _index_row(beta: float, tol: float) -> dict:
    am = max_alpha(beta, tol)
    idx = eta_from_alpha(am)
    pred = math.pi / (2 * beta)
    return {"beta": beta, "alpha_max": am, "index": idx, "predicted": pred, "abs_err": abs(idx - pred)}


def cmd_worm_index(cfg: RunConfig) -> int:
    cfg.worm()
    emit_summary(_index_row(cfg.beta, cfg.tol), path=cfg.out)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.steps < 1:
        raise UsageError("steps must be >= 1")
    if cfg.steps > 1 and not cfg.beta_max > cfg.beta_min:
        raise UsageError("beta-max must exceed beta-min")
    betas = np.linspace(cfg.beta_min, cfg.beta_max, cfg.steps) if cfg.steps > 1 else [cfg.beta_min]
    rows = [_index_row(float(b), cfg.tol) for b in betas]
    on_stdout = write_csv(
        ["beta", "alpha_max", "index_computed", "index_predicted", "abs_err"],
        [(r["beta"], r["alpha_max"], r["index"], r["predicted"], r["abs_err"]) for r in rows],
        cfg.out,
    )
    idx = [r["index"] for r in rows]
    emit_summary(
        {
            "rows": len(rows),
            "max_abs_err": max(r["abs_err"] for r in rows),
            "strictly_decreasing": all(x > y for x, y in zip(idx, idx[1:])),
            "index_range": [min(idx), max(idx)],
        },
        to_stderr=on_stdout,
    )
    return 0


def _alpha(cfg: RunConfig) -> float:
    if cfg.alpha is not None:
        if not cfg.alpha > 0:
            raise UsageError("alpha must be positive")
        return cfg.alpha
    if cfg.eta is not None:
        try:
            return alpha_from_eta(cfg.eta)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError(f"{cfg.command} needs --alpha or --eta")


def cmd_criterion(cfg: RunConfig) -> int:
    params = cfg.worm()
    alpha = _alpha(cfg)
    try:
        psi = build_psi_radial(alpha, cfg.theta, params.beta)
    except InfeasibleError as exc:
        emit_summary({"feasible": False, "alpha": alpha, "beta": params.beta, "diagnostic": str(exc)})
        return 1
    n_r, n_phi = cfg.grid
    lo, hi = params.log_r_range
    rows = []
    for lr in np.linspace(lo, hi, n_r):
        for phi in 2 * math.pi * np.arange(n_phi) / n_phi:
            r = math.exp(lr)
            rows.append((r, phi, criterion_worm(params, psi, alpha, r, phi)))
    on_stdout = write_csv(["r", "phi", "value"], rows, cfg.out)
    mx = max(v for _, _, v in rows)
    feasible = mx <= FEASIBILITY_SLACK
    emit_summary(
        {"feasible": feasible, "alpha": alpha, "beta": params.beta, "theta": cfg.theta,
         "grid": list(cfg.grid), "max_value": mx, "margin": -mx},
        to_stderr=on_stdout,
    )
    return 0 if feasible else 1


def cmd_riccati(cfg: RunConfig) -> int:
    if cfg.a is None or cfg.b is None:
        raise UsageError("riccati needs --a and --b")
    try:
        params = RiccatiParams(cfg.a, cfg.b, cfg.theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not 0 < cfg.t0 < cfg.t1:
        raise UsageError("need 0 < t0 < t1")
    if not cfg.step > 0:
        raise UsageError("step must be positive")
    try:
        s0 = closed_form(params, cfg.t0)
    except PoleError as exc:
        emit_summary({"ok": False, "diagnostic": str(exc)})
        return 1
    sol = integrate(params, s0, cfg.t0, cfg.t1, cfg.step)
    rows, worst, pole = [], 0.0, None
    for t, s in zip(sol.t, sol.s):
        try:
            ref = closed_form(params, float(t))
        except PoleError:
            pole = float(t)
            break
        err = abs(s - ref)
        worst = max(worst, err)
        rows.append((t, ref, s, err))
    on_stdout = write_csv(["t", "s_closed", "s_numeric", "abs_err"], rows, cfg.out)
    ok = not sol.blew_up and pole is None and worst <= cfg.tol
    emit_summary(
        {"ok": ok, "a": cfg.a, "b": cfg.b, "theta": cfg.theta, "t0": cfg.t0, "t1": cfg.t1,
         "samples": len(rows), "max_abs_err": worst, "blew_up": sol.blew_up, "blowup_t": sol.blowup_t},
        to_stderr=on_stdout,
    )
    return 0 if ok else 1


def cmd_psh(cfg: RunConfig) -> int:
    if cfg.eta is None:
        raise UsageError("psh needs --eta")
    if not 0 < cfg.eta < 1:
        raise UsageError("eta must lie in (0, 1)")
    if cfg.domain == "worm":
        params = cfg.worm()
        spec = CATALOG["worm"](params.beta, params.a)
        try:
            if cfg.alpha is not None:
                psi = build_psi_radial(cfg.alpha, cfg.theta, params.beta)
            else:
                psi = StrictMarginBuilder(params.beta, cfg.theta)(cfg.eta)
        except InfeasibleError as exc:
            emit_summary({"passed": False, "eta": cfg.eta, "diagnostic": str(exc)}, path=cfg.out)
            return 1
    else:
        spec = CATALOG[cfg.domain]()
        psi = zero_weight()
    samples = default_samples(spec, cfg.grid, cfg.depths, n_boundary=cfg.grid[0] * cfg.grid[1], seed=cfg.seed)
    rep = check_psh_grid(spec, psi, cfg.eta, samples)
    out = rep.as_dict()
    out["weight"] = psi.name
    emit_summary(out, path=cfg.out)
    return 0 if rep.passed else 1


def cmd_validate(cfg: RunConfig) -> int:
    if cfg.samples < 1:
        raise UsageError("samples must be >= 1")
    specs = []
    if cfg.domain == "worm" or cfg.beta is not None:
        specs.append(CATALOG["worm"](*((cfg.beta, cfg.cutoff) if cfg.beta is not None else ())))
    specs.append(CATALOG["ball"]())
    reports = [validate_defining(s, cfg.samples, cfg.seed).as_dict() for s in specs]
    ok = all(r["passed"] for r in reports)
    emit_summary({"passed": ok, "reports": reports}, path=cfg.out)
    return 0 if ok else 1


COMMANDS = {
    "worm-index": cmd_worm_index,
    "sweep": cmd_sweep,
    "criterion": cmd_criterion,
    "psh": cmd_psh,
    "riccati": cmd_riccati,
    "validate": cmd_validate,
}


def _setup_logging():
    level = os.environ.get("DFX_LOG", "error").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = make_config(ns)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dfx {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (EvaluationError, PreconditionError) as exc:
        print(f"dfx {ns.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
