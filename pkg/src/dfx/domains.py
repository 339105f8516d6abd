"""Catalog of defining functions: the beta-worm domain and ball/ellipsoid sanity domains."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .calculus import (
    FIRST_STEP,
    SECOND_STEP,
    Array,
    DomainError,
    ScalarField,
    complex_hessian,
    cpoint,
    hess_pair,
    tangent_field_c2,
    wirtinger_grad,
)


@dataclass(frozen=True)
class WormParams:
    """beta-worm parameters; the cutoff is ``((|x| - x0)_+ / (a - x0))^m`` with ``x0 = beta - pi/2``."""

    beta: float
    a: Optional[float] = None
    m: int = 4

    def __post_init__(self):
        if not self.beta > math.pi / 2:
            raise ValueError(f"beta must exceed pi/2, got {self.beta}")
        if self.a is None:
            object.__setattr__(self, "a", self.x0 + 1.0)
        if not self.a > self.x0:
            raise ValueError(f"cutoff knee a={self.a} must exceed x0={self.x0}")
        if self.m < 4:
            raise ValueError("cutoff exponent m must be >= 4 for a C^3 boundary")

    @property
    def x0(self) -> float:
        return self.beta - math.pi / 2

    @property
    def log_r_range(self) -> tuple[float, float]:
        """Range of log|w| over the Levi-flat annulus."""
        half = self.beta / 2 - math.pi / 4
        return -half, half


def cutoff_chi(params: WormParams, x: float) -> tuple[float, float, float]:
    """Cutoff value and first two derivatives at ``x``."""
    width = params.a - params.x0
    s = max(0.0, abs(x) - params.x0) / width
    if s == 0.0:
        return 0.0, 0.0, 0.0
    m = params.m
    sign = 1.0 if x > 0 else -1.0
    return s**m, sign * m * s ** (m - 1) / width, m * (m - 1) * s ** (m - 2) / width**2


@dataclass(frozen=True)
class DomainSpec:
    name: str
    r: ScalarField
    interior_point: Array
    boundary_sampler: Callable[[np.random.Generator, int], list]
    sigma: Optional[Callable[[int, int], list]] = None
    bbox: tuple = ()
    params: dict = field(default_factory=dict)
    length_scale: Callable[[Array], float] = lambda p: 1.0


def _worm_parts(params: WormParams, p: Array):
    z, w = p[0], p[1]
    aw2 = (w * w.conjugate()).real
    if aw2 == 0.0:
        raise DomainError("worm defining function is singular at w = 0")
    ell = math.log(aw2)
    u = complex(math.cos(ell), math.sin(ell))
    return z, w, aw2, ell, u


def worm_defining(params: WormParams) -> DomainSpec:
    """``r = |z - exp(i log|w|^2)|^2 - 1 + chi(log|w|^2)`` with exact derivatives."""

    def value(p):
        z, w, aw2, ell, u = _worm_parts(params, p)
        return abs(z - u) ** 2 - 1.0 + cutoff_chi(params, ell)[0]

    def grad(p):
        z, w, aw2, ell, u = _worm_parts(params, p)
        _, d1, _ = cutoff_chi(params, ell)
        r_z = z.conjugate() - u.conjugate()
        r_w = (-2.0 * (z * u.conjugate()).imag + d1) / w
        return np.array([r_z, r_w])

    def hess(p):
        z, w, aw2, ell, u = _worm_parts(params, p)
        _, _, d2 = cutoff_chi(params, ell)
        r_zwb = 1j * u.conjugate() / w.conjugate()
        r_wwb = (2.0 * (z * u.conjugate()).real + d2) / aw2
        return np.array([[1.0, r_zwb], [r_zwb.conjugate(), r_wwb]])

    r = ScalarField(value, grad, hess, name=f"worm(beta={params.beta:g})")

    def sampler(rng: np.random.Generator, n: int) -> list:
        pts = []
        for _ in range(n):
            ell = rng.uniform(-params.a, params.a) * (1 - 1e-3)
            phi, theta = rng.uniform(0, 2 * math.pi, size=2)
            u = np.exp(1j * ell)
            rad = math.sqrt(1.0 - cutoff_chi(params, ell)[0])
            pts.append(np.array([u + rad * np.exp(1j * theta), math.exp(ell / 2) * np.exp(1j * phi)]))
        return pts

    return DomainSpec(
        name="worm",
        r=r,
        interior_point=np.array([1.0 + 0j, 1.0 + 0j]),
        boundary_sampler=sampler,
        sigma=lambda n_r, n_phi: worm_sigma_grid(params, n_r, n_phi),
        bbox=(3.0, params.a),
        params={"beta": params.beta, "a": params.a, "m": params.m},
        # w-derivatives scale like 1/|w|, z-derivatives like 1; split the difference
        length_scale=lambda p: min(1.0, math.sqrt(abs(p[1]))),
    )


def worm_sigma_grid(params: WormParams, n_r: int, n_phi: int) -> list:
    """Points ``(0, r e^{i phi})`` on the Levi-flat annulus, regular in (log r, phi)."""
    if n_r < 2 or n_phi < 1:
        raise ValueError("need n_r >= 2 and n_phi >= 1")
    lo, hi = params.log_r_range
    pts = []
    for lr in np.linspace(lo, hi, n_r):
        rad = math.exp(lr)
        # rounding can put the end radii a few ulps past the flat interval
        while cutoff_chi(params, math.log(rad * rad))[0] != 0.0:
            rad = math.nextafter(rad, 1.0)
        for phi in 2 * math.pi * np.arange(n_phi) / n_phi:
            w = rad * complex(math.cos(phi), math.sin(phi))
            while cutoff_chi(params, math.log(abs(w) ** 2))[0] != 0.0:
                w *= 1 - 2**-52 if abs(w) > 1 else 1 + 2**-52
            pts.append(np.array([0j, w]))
    return pts


def ball_defining(radii=(1.0, 1.0)) -> DomainSpec:
    """Ellipsoid ``sum |z_j / R_j|^2 - 1`` (the unit ball for unit radii)."""
    R = np.asarray(radii, dtype=float)
    if R.size < 2 or np.any(R <= 0):
        raise ValueError("need at least two positive radii")
    inv2 = 1.0 / R**2

    def value(p):
        return float(np.sum(inv2 * np.abs(p) ** 2) - 1.0)

    def sampler(rng: np.random.Generator, n: int) -> list:
        pts = []
        for _ in range(n):
            v = rng.normal(size=R.size) + 1j * rng.normal(size=R.size)
            pts.append(R * v / np.linalg.norm(v))
        return pts

    r = ScalarField(
        value,
        lambda p: inv2 * np.conj(p),
        lambda p: np.diag(inv2).astype(complex),
        name="ball" if np.all(R == 1) else f"ellipsoid{tuple(R)}",
    )
    return DomainSpec(
        name="ball",
        r=r,
        interior_point=np.zeros(R.size, dtype=complex),
        boundary_sampler=sampler,
        bbox=tuple(R),
        params={"radii": list(R)},
    )


def _rel_err(approx: Array, exact: Array) -> float:
    return float(np.max(np.abs(approx - exact)) / max(1.0, float(np.max(np.abs(exact)))))


def fd_derivatives(f: ScalarField, p: Array, scale: float = 1.0) -> tuple[Array, Array]:
    """Central-difference gradient and Hessian, Richardson-combined over steps h and h/2."""
    base = scale * max(1.0, float(np.linalg.norm(p)))
    h1, h2 = FIRST_STEP * base * 10, SECOND_STEP * base * 3
    g = [wirtinger_grad(f, p, h=h, analytic=False) for h in (h1, h1 / 2)]
    H = [complex_hessian(f, p, h=h, analytic=False) for h in (h2, h2 / 2)]
    return (4 * g[1] - g[0]) / 3, (4 * H[1] - H[0]) / 3


@dataclass
class ValidationReport:
    domain: str
    n_samples: int
    max_grad_rel_err: float = 0.0
    max_hess_rel_err: float = 0.0
    min_grad_norm: float = math.inf
    failures: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())

    def fail(self, condition: str, message: str):
        self.failures.setdefault(condition, []).append(message)

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "n_samples": self.n_samples,
            "max_grad_rel_err": self.max_grad_rel_err,
            "max_hess_rel_err": self.max_hess_rel_err,
            "min_grad_norm": self.min_grad_norm,
            "passed": self.passed,
            "failures": self.failures,
        }


def validate_defining(spec: DomainSpec, n_samples: int = 100, seed: int = 0, rel_tol: float = 1e-6) -> ValidationReport:
    """Empirical check of the defining-function conditions and of the analytic callbacks.

    Derivative errors are relative to the largest entry, floored at 1.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    rep = ValidationReport(spec.name, n_samples)
    r = spec.r
    if not r(spec.interior_point) < 0:
        rep.fail("interior", f"r >= 0 at interior witness {spec.interior_point}")
    for p in spec.boundary_sampler(rng, n_samples):
        p = cpoint(p)
        rv = r(p)
        if abs(rv) > 1e-10:
            rep.fail("boundary", f"sampled point {p} has r = {rv:.3e}")
        g = wirtinger_grad(r, p)
        gn = 2 * float(np.linalg.norm(g))
        rep.min_grad_norm = min(rep.min_grad_norm, gn)
        if gn < 1e-8:
            rep.fail("gradient", f"vanishing gradient at {p}")
        if r.grad is None and r.hess is None:
            continue
        g_fd, H_fd = fd_derivatives(r, p, spec.length_scale(p))
        if r.grad is not None:
            e = _rel_err(g_fd, g)
            rep.max_grad_rel_err = max(rep.max_grad_rel_err, e)
            if e > rel_tol:
                rep.fail("grad_callback", f"rel err {e:.2e} at {p}")
        if r.hess is not None:
            e = _rel_err(H_fd, complex_hessian(r, p))
            rep.max_hess_rel_err = max(rep.max_hess_rel_err, e)
            if e > rel_tol:
                rep.fail("hess_callback", f"rel err {e:.2e} at {p}")
    return rep


def levi_form(spec: DomainSpec, p) -> float:
    """``Hess_r(L, L)`` for the global tangent field in C^2."""
    L = tangent_field_c2(spec.r, p)
    return hess_pair(complex_hessian(spec.r, p), L, L).real


CATALOG = {
    "worm": lambda beta=math.pi, a=None: worm_defining(WormParams(beta, a)),
    "ball": lambda radii=(1.0, 1.0): ball_defining(radii),
}
