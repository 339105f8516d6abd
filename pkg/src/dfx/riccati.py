"""The Riccati equation ``s' = -a s^2 - s/t - b/t^2``: closed form, integration, comparison, worm index."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .criterion import (
    InfeasibleError,
    PolarWeight,
    Weight,
    alpha_from_eta,
    eta_from_alpha,
    perturb_weight,
)
from .domains import WormParams

BLOWUP_CAP = 1e8
# feasibility probes run closer to the pole so the cap does not bias max_alpha
PROBE_CAP = 1e12
POLE_TOL = 1e-8


class PoleError(ValueError):
    pass


class NotSubsolutionError(ValueError):
    pass


@dataclass(frozen=True)
class RiccatiParams:
    a: float
    b: float
    theta: float = math.pi / 2

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"a and b must be positive, got a={self.a}, b={self.b}")

    @classmethod
    def worm(cls, alpha: float, theta: float = math.pi / 2) -> "RiccatiParams":
        return cls(alpha, 4 * alpha, theta)

    @property
    def amplitude(self) -> float:
        return math.sqrt(self.b / self.a)

    @property
    def frequency(self) -> float:
        return math.sqrt(self.a * self.b)


@dataclass
class RiccatiSolution:
    t: np.ndarray
    s: np.ndarray
    blew_up: bool = False
    blowup_t: Optional[float] = None
    source: str = "integrated"
    fn: Optional[Callable[[float], float]] = None
    params: Optional[RiccatiParams] = None


def residual(params: RiccatiParams, t, s, ds):
    """``s' + a s^2 + s/t + b/t^2``; zero on solutions, <= 0 on sub-solutions."""
    return ds + params.a * s**2 + s / t + params.b / t**2


def closed_form(params: RiccatiParams, t: float) -> float:
    """``sqrt(b/a) cot(sqrt(ab) log t + theta) / t``."""
    if not t > 0:
        raise ValueError("t must be positive")
    arg = params.frequency * math.log(t) + params.theta
    if abs(arg - math.pi * round(arg / math.pi)) < POLE_TOL:
        raise PoleError(f"cotangent pole at t={t} (argument {arg})")
    return params.amplitude / (math.tan(arg) * t)


def match_theta(a: float, b: float, t0: float, s0: float) -> float:
    """Phase of the closed-form solution through ``(t0, s0)``, with the argument in (0, pi) at t0."""
    arg0 = math.pi / 2 - math.atan(s0 * t0 / math.sqrt(b / a))
    return arg0 - math.sqrt(a * b) * math.log(t0)


def closed_form_solution(params: RiccatiParams, t) -> RiccatiSolution:
    t = np.asarray(t, dtype=float)
    s = np.array([closed_form(params, x) for x in t])
    return RiccatiSolution(t, s, source="closed-form", fn=lambda x: closed_form(params, x), params=params)


def _rk4(a, b, t, s, h):
    def f(t, s):
        return -a * s * s - s / t - b / (t * t)

    k1 = f(t, s)
    k2 = f(t + h / 2, s + h / 2 * k1)
    k3 = f(t + h / 2, s + h / 2 * k2)
    k4 = f(t + h, s + h * k3)
    return s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _march(a, b, t0, s0, t1, max_step, cap, rtol, atol, record):
    """Adaptive RK4 with step doubling, in either direction.

    Returns ``(ts, ss, blowup_t)``; ``blowup_t`` is None when t1 was reached.
    """
    direction = 1.0 if t1 > t0 else -1.0
    t, s = t0, s0
    h = min(max_step, abs(t1 - t0))
    ts, ss = [t], [s]
    while direction * (t1 - t) > 0:
        h = min(h, max_step, abs(t1 - t))
        last = h == abs(t1 - t)
        if h < 1e-14 * abs(t) and not last:
            return ts, ss, t
        step = direction * h
        full = _rk4(a, b, t, s, step)
        half = _rk4(a, b, t, s, step / 2)
        two = _rk4(a, b, t + step / 2, half, step / 2)
        if not (math.isfinite(full) and math.isfinite(two)):
            h /= 4
            continue
        err = abs(two - full) / 15
        tol = atol + rtol * max(abs(s), abs(two))
        if err > tol:
            h *= max(0.1, 0.9 * (tol / err) ** 0.2)
            continue
        t, s = (t1 if last else t + step), two + (two - full) / 15
        if record:
            ts.append(t)
            ss.append(s)
        if abs(s) > cap:
            return ts, ss, t
        h *= min(4.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
    if not record:
        ts.append(t)
        ss.append(s)
    return ts, ss, None


def integrate(
    params: RiccatiParams,
    s0: float,
    t0: float,
    t1: float,
    step: float,
    cap: float = BLOWUP_CAP,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> RiccatiSolution:
    """RK4 trajectory of ``s' = -a s^2 - s/t - b/t^2`` from ``(t0, s0)`` towards ``t1``.

    ``step`` is the initial and maximal step. Blow-up is declared when
    ``|s|`` exceeds ``cap`` or step-doubling control drives the step to zero.
    """
    if not (0 < t0 < t1) or not math.isfinite(t1):
        raise ValueError(f"invalid interval [{t0}, {t1}]")
    if not step > 0:
        raise ValueError("step must be positive")
    ts, ss, tb = _march(params.a, params.b, t0, s0, t1, step, cap, rtol, atol, True)
    return RiccatiSolution(np.array(ts), np.array(ss), tb is not None, tb, "integrated", params=params)


def blowup_free(params: RiccatiParams, s_mid: float, t_lo: float, t_hi: float, t_mid: float = 1.0, cap: float = PROBE_CAP) -> bool:
    """Whether the solution through ``(t_mid, s_mid)`` stays finite on ``[t_lo, t_hi]``."""
    for end in (t_hi, t_lo):
        step = abs(end - t_mid) / 32
        _, _, tb = _march(params.a, params.b, t_mid, s_mid, end, step, cap, 1e-10, 1e-12, False)
        if tb is not None:
            return False
    return True


@dataclass
class ComparisonReport:
    dominated: bool
    theta: float
    max_excess: float
    max_residual: float
    n_samples: int
    note: str = ""


def _sample_derivative(sol: RiccatiSolution) -> np.ndarray:
    if sol.fn is not None:
        out = []
        for t in sol.t:
            h = 1e-5 * t
            out.append((sol.fn(t + h) - sol.fn(t - h)) / (2 * h))
        return np.array(out)
    return np.gradient(sol.s, sol.t, edge_order=2)


def comparison_check(sub: RiccatiSolution, params: RiccatiParams, ineq_tol: float = 1e-9, dom_tol: float = 1e-6) -> ComparisonReport:
    """Check that a sub-solution stays below the exact solution with the same initial value.

    The differential inequality is verified first (central differences of
    ``sub.fn`` when given, else of the samples); a violation raises
    NotSubsolutionError and no verdict is returned.  ``ineq_tol`` is relative
    to the size of the individual terms, since the equation is invariant
    under ``t -> c t, s -> s / c``.
    """
    t, s = np.asarray(sub.t, float), np.asarray(sub.s, float)
    if t.size < 3 or np.any(np.diff(t) <= 0):
        raise ValueError("sub-trajectory needs >= 3 increasing samples")
    ds = _sample_derivative(sub)
    res = residual(params, t, s, ds)
    scale = 1 + np.abs(ds) + params.a * s**2 + np.abs(s) / t + params.b / t**2
    rel = res / scale
    worst = float(np.max(res))
    if np.max(rel) > ineq_tol:
        i = int(np.argmax(rel))
        raise NotSubsolutionError(f"relative residual {rel[i]:.3e} > {ineq_tol} at t={t[i]}")
    theta = match_theta(params.a, params.b, t[0], s[0])
    matched = RiccatiParams(params.a, params.b, theta)
    # the comparison is only meaningful before the matched solution's first pole
    args = matched.frequency * np.log(t) + theta
    ok = args < math.pi
    note = "" if np.all(ok) else f"matched solution has a pole before t={t[-1]}"
    ref = np.array([closed_form(matched, x) for x in t[ok]])
    excess = float(np.max(s[ok] - ref)) if ref.size else -math.inf
    return ComparisonReport(
        dominated=bool(excess <= dom_tol and np.all(ok)),
        theta=theta,
        max_excess=excess,
        max_residual=worst,
        n_samples=int(t.size),
        note=note,
    )


def _feasible_alpha(alpha: float, beta: float) -> bool:
    lo, hi = WormParams(beta).log_r_range
    p = RiccatiParams.worm(alpha)
    return blowup_free(p, p.amplitude / math.tan(p.theta), math.exp(lo), math.exp(hi))


def max_alpha(beta: float, tol: float = 1e-9) -> float:
    """Supremum of alpha whose worm Riccati solution (theta = pi/2) is blow-up free on the annulus.

    Decided by integrating the ODE, not by the period formula.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    while _feasible_alpha(hi, beta):
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise RuntimeError("no blow-up found below alpha = 1e6")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _feasible_alpha(mid, beta):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def worm_index(beta: float, tol: float = 1e-9) -> float:
    return eta_from_alpha(max_alpha(beta, tol))


def build_psi_radial(alpha: float, theta: float = math.pi / 2, beta: float = math.pi) -> Weight:
    """Radial weight ``(1/alpha) log sin(2 alpha log r + theta)`` solving the worm equation with equality.

    Its radial derivative is the Riccati solution ``2 cot(2 alpha log r + theta) / r``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    lo, hi = WormParams(beta).log_r_range
    for name, lr in (("inner", lo), ("outer", hi)):
        arg = 2 * alpha * lr + theta
        if not 0 < arg < math.pi:
            raise InfeasibleError(
                f"{name} edge r={math.exp(lr):.6g}: argument {arg:.6g} leaves (0, pi)"
            )

    def arg(r):
        x = 2 * alpha * math.log(r) + theta
        if not 0 < x < math.pi:
            raise InfeasibleError(f"r={r} outside the weight's domain")
        return x

    def f(r, phi):
        return math.log(math.sin(arg(r))) / alpha

    def f_r(r, phi):
        return 2 / (math.tan(arg(r)) * r)

    def f_rr(r, phi):
        x = arg(r)
        return -(2 / math.tan(x) + 4 * alpha / math.sin(x) ** 2) / r**2

    zero = lambda r, phi: 0.0  # noqa: E731
    params = {"name": f"radial(alpha={alpha:g}, theta={theta:g})", "alpha": alpha, "theta": theta, "beta": beta}
    return PolarWeight(f, f_r, zero, f_rr, zero, params=params).to_weight()


@dataclass
class WormRadialFamily:
    """The radial Riccati weights ``{theta, alpha_psi, mu}`` used for the worm index search."""

    beta: float
    thetas: tuple = (math.pi / 2,)
    margins: tuple = (0.0,)
    mus: tuple = (0.0,)

    def candidates(self, eta: float):
        alpha = alpha_from_eta(eta)
        for theta in self.thetas:
            for k in self.margins:
                for mu in self.mus:
                    yield lambda theta=theta, k=k, mu=mu: perturb_weight(
                        build_psi_radial(alpha * (1 + k), theta, self.beta), mu
                    )


@dataclass
class StrictMarginBuilder:
    """eta -> radial weight built halfway between alpha(eta) and the computed alpha cap."""

    beta: float
    theta: float = math.pi / 2
    alpha_cap: float = field(default=None)

    def __post_init__(self):
        if self.alpha_cap is None:
            self.alpha_cap = max_alpha(self.beta)

    def alpha_psi(self, eta: float) -> float:
        alpha = alpha_from_eta(eta)
        if alpha >= self.alpha_cap:
            raise InfeasibleError(f"alpha({eta})={alpha:.6g} >= cap {self.alpha_cap:.6g}")
        return 0.5 * (alpha + self.alpha_cap)

    def __call__(self, eta: float) -> Weight:
        return build_psi_radial(self.alpha_psi(eta), self.theta, self.beta)
