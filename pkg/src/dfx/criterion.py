"""Boundary criterion for the Diederich-Fornaess index in C^2, its worm form, and an index search."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol

import numpy as np

from .calculus import (
    FIRST_STEP,
    THIRD_STEP,
    Array,
    EvaluationError,
    PreconditionError,
    ScalarField,
    apply_field,
    complex_hessian,
    cpoint,
    grad_norm,
    hess_pair,
    holomorphic_derivative,
    normal_field,
    normal_vector_field,
    tangent_field_c2,
    third_order,
    wirtinger_grad,
)
from .domains import DomainSpec, WormParams

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-10
SIGMA_TOL = 1e-8
FEASIBILITY_SLACK = 1e-9


class NotInSigmaError(PreconditionError):
    """The point is not in the degenerate set of the Levi form."""


class InfeasibleError(ValueError):
    pass


def alpha_from_eta(eta: float) -> float:
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    return eta / (1 - eta)


def eta_from_alpha(alpha: float) -> float:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return alpha / (1 + alpha)


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class PolarWeight:
    """A weight on a neighborhood of the worm's Levi-flat annulus, as ``f(r, phi)`` with ``w = r e^{i phi}``.

    Missing derivative callbacks fall back to central differences.
    """

    f: Callable[[float, float], float]
    f_r: Optional[Callable[[float, float], float]] = None
    f_phi: Optional[Callable[[float, float], float]] = None
    f_rr: Optional[Callable[[float, float], float]] = None
    f_phiphi: Optional[Callable[[float, float], float]] = None
    params: dict = field(default_factory=dict)

    def derivatives(self, r: float, phi: float) -> tuple[float, float, float, float]:
        h = 1e-4 * r
        k = 1e-4
        f = self.f
        f_r = self.f_r(r, phi) if self.f_r else (f(r + h, phi) - f(r - h, phi)) / (2 * h)
        f_phi = self.f_phi(r, phi) if self.f_phi else (f(r, phi + k) - f(r, phi - k)) / (2 * k)
        f_rr = (
            self.f_rr(r, phi)
            if self.f_rr
            else (f(r + h, phi) - 2 * f(r, phi) + f(r - h, phi)) / h**2
        )
        f_pp = (
            self.f_phiphi(r, phi)
            if self.f_phiphi
            else (f(r, phi + k) - 2 * f(r, phi) + f(r, phi - k)) / k**2
        )
        return f_r, f_phi, f_rr, f_pp

    def to_weight(self) -> "Weight":
        """Extend to C^2 independently of z, with exact Wirtinger derivatives."""

        def polar(p):
            w = complex(p[1])
            r = abs(w)
            if r == 0:
                raise EvaluationError("polar weight undefined at w = 0")
            return r, math.atan2(w.imag, w.real)

        def value(p):
            return float(self.f(*polar(p)))

        def grad(p):
            r, phi = polar(p)
            f_r, f_phi, _, _ = self.derivatives(r, phi)
            psi_w = 0.5 * np.exp(-1j * phi) * (f_r - 1j * f_phi / r)
            return np.array([0j, psi_w])

        def hess(p):
            r, phi = polar(p)
            f_r, _, f_rr, f_pp = self.derivatives(r, phi)
            lap = f_rr + f_r / r + f_pp / r**2
            return np.array([[0j, 0j], [0j, lap / 4]])

        return Weight(value, grad, hess, name=self.params.get("name", "polar"), params=dict(self.params), polar=self)


@dataclass(frozen=True)
class Weight(ScalarField):
    params: dict = field(default_factory=dict)
    polar: Optional[PolarWeight] = None


def zero_weight(n: int = 2) -> Weight:
    return Weight(
        lambda p: 0.0,
        lambda p: np.zeros(n, dtype=complex),
        lambda p: np.zeros((n, n), dtype=complex),
        name="0",
        params={"name": "0"},
        polar=PolarWeight(lambda r, phi: 0.0, *(lambda r, phi: 0.0,) * 4, params={"name": "0"}),
    )


def as_weight(psi: ScalarField) -> Weight:
    if isinstance(psi, Weight):
        return psi
    return Weight(psi.value, psi.grad, psi.hess, name=psi.name)


# ---------------------------------------------------------------------------
# the general criterion


@dataclass
class CriterionTerms:
    alpha: float
    levi: float
    lbar_psi: complex
    n_r_r: complex
    hess_r_nl: complex
    hess_psi_ll: float
    d3: complex
    grad_norm: float
    l_inv_grad_norm: complex

    @property
    def modulus_term(self) -> float:
        return self.alpha * abs(self.lbar_psi * self.n_r_r + self.hess_r_nl) ** 2

    @property
    def hess_term(self) -> float:
        return (self.grad_norm / 2) ** 2 * self.hess_psi_ll

    @property
    def d3_term(self) -> complex:
        return self.grad_norm / 2 * self.d3

    @property
    def gradvar_term(self) -> complex:
        return self.grad_norm / 2 * self.grad_norm * self.l_inv_grad_norm * self.hess_r_nl

    @property
    def value(self) -> complex:
        return self.modulus_term + self.hess_term + self.d3_term + self.gradvar_term


def criterion_terms(
    r: ScalarField, psi: ScalarField, eta: float, p, *, d3_step: Optional[float] = None, l_scale: complex = 1.0
) -> CriterionTerms:
    """All pieces of the boundary inequality at a point of the degenerate set.

    The default third-order step is shrunk by the curvature length ``1 / max|H|``
    so that it stays small against the local geometry (the worm near small |w|).
    ``l_scale`` replaces the tangent field L by ``l_scale * L``.
    """
    if l_scale == 0:
        raise ValueError("l_scale must be nonzero")
    p = cpoint(p)
    if p.size != 2:
        raise ValueError("the boundary criterion is implemented in C^2")
    alpha = alpha_from_eta(eta)
    rv = r(p)
    if abs(rv) > BOUNDARY_TOL:
        raise PreconditionError(f"point is not on the boundary: r = {rv:.3e}")
    L = l_scale * tangent_field_c2(r, p)
    N = normal_field(r, p)
    H = complex_hessian(r, p)
    levi = hess_pair(H, L, L).real
    if d3_step is None:
        d3_step = THIRD_STEP * min(1.0, 1.0 / float(np.max(np.abs(H))))
    if levi > SIGMA_TOL:
        raise NotInSigmaError(f"Levi form {levi:.3e} > {SIGMA_TOL} at {p}")
    g = wirtinger_grad(r, p)
    g_psi = wirtinger_grad(psi, p)
    # psi real: Lbar psi = conj(L psi)
    lbar_psi = apply_field(L, g_psi).conjugate()
    h = FIRST_STEP * max(1.0, float(np.linalg.norm(p)))
    l_inv = complex(holomorphic_derivative(lambda q: 1.0 / grad_norm(r, q), p, L, h))
    return CriterionTerms(
        alpha=alpha,
        levi=levi,
        lbar_psi=lbar_psi,
        n_r_r=apply_field(N, g),
        hess_r_nl=hess_pair(H, N, L),
        hess_psi_ll=hess_pair(complex_hessian(psi, p), L, L).real,
        d3=third_order(r, normal_vector_field(r), lambda q: l_scale * tangent_field_c2(r, q), p, h=d3_step),
        grad_norm=2 * float(np.linalg.norm(g)),
        l_inv_grad_norm=l_inv,
    )


def criterion_general(spec: DomainSpec, psi: ScalarField, eta: float, p) -> float:
    """Left-hand side of the boundary inequality at ``p`` (feasible when <= 0).

    The expression is real for exact data; the imaginary residue of the
    finite-difference terms is dropped.
    """
    t = criterion_terms(spec.r, psi, eta, p)
    v = t.value
    if abs(v.imag) > 1e-6 * max(1.0, abs(v.real)):
        log.debug("criterion has imaginary residue %.3e at %s", v.imag, p)
    return float(v.real)


@dataclass
class CriterionReport:
    values: list
    points: list
    max_value: float
    argmax: Optional[Array]
    skipped: int
    vacuous: bool
    meta: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return -self.max_value

    @property
    def feasible(self) -> bool:
        return self.vacuous or self.max_value <= FEASIBILITY_SLACK


def criterion_sweep(spec: DomainSpec, psi: ScalarField, eta: float, points: Iterable, **meta) -> CriterionReport:
    """Evaluate the criterion over boundary points; points off the degenerate set are skipped."""
    values, kept, skipped = [], [], 0
    for p in points:
        try:
            values.append(criterion_general(spec, psi, eta, p))
            kept.append(cpoint(p))
        except NotInSigmaError:
            skipped += 1
    if not values:
        return CriterionReport([], [], -math.inf, None, skipped, True, meta)
    i = int(np.argmax(values))
    return CriterionReport(values, kept, values[i], kept[i], skipped, False, meta)


# ---------------------------------------------------------------------------
# worm specialization


def criterion_worm(params: WormParams, psi_polar, alpha: float, r: float, phi: float) -> float:
    """Polar form of the worm inequality at ``w = r e^{i phi}`` on the Levi-flat annulus."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    lo, hi = params.log_r_range
    lr = math.log(r)
    if not lo - 1e-12 <= lr <= hi + 1e-12:
        raise ValueError(f"log r = {lr} outside the annulus [{lo}, {hi}]")
    pw = psi_polar.polar if isinstance(psi_polar, Weight) else psi_polar
    f_r, f_phi, f_rr, f_pp = pw.derivatives(r, phi)
    r2 = r * r
    return (
        alpha * f_r**2 / 4
        + alpha * f_phi**2 / (4 * r2)
        + alpha / r2
        - alpha * f_phi / r2
        + f_rr / 4
        + f_r / (4 * r)
        + f_pp / (4 * r2)
    )


# ---------------------------------------------------------------------------
# perturbations


def perturb_weight(psi: ScalarField, mu: float) -> Weight:
    """``psi + mu * g(z, z)`` with ``g(z, z) = |z|^2 / 2``, so the Levi-direction Hessian shifts by ``mu / 2``."""
    psi = as_weight(psi)
    if mu == 0:
        return psi
    half = 0.5 * mu
    grad = None if psi.grad is None else (lambda p: psi.grad(p) + half * np.conj(p))
    hess = None if psi.hess is None else (lambda p: psi.hess(p) + half * np.eye(len(p)))
    return Weight(
        lambda p: psi.value(p) + half * float(np.sum(np.abs(p) ** 2)),
        grad,
        hess,
        name=f"{psi.name}+{mu}|z|^2/2",
        params={**psi.params, "mu": psi.params.get("mu", 0.0) + mu},
    )


def perturb_eta(eta: float, nu: float) -> float:
    """``1 - 1 / (1/(1 - eta) - nu)``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if not 0 <= nu < 1 / (1 - eta) - 1:
        raise ValueError(f"nu={nu} outside [0, {1 / (1 - eta) - 1})")
    if nu == 0:
        return eta
    return 1 - 1 / (1 / (1 - eta) - nu)


# ---------------------------------------------------------------------------
# angular averaging


@dataclass
class RadialProfile:
    r: Array
    F: Array
    s: Array
    ds: Array
    residual: Array


STENCIL = 7


def _stencil_weights(offsets: Array, order: int) -> Array:
    """Finite-difference weights for the ``order``-th derivative on integer ``offsets``."""
    k = np.arange(len(offsets))
    V = offsets[None, :].astype(float) ** k[:, None]
    rhs = np.zeros(len(offsets))
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _derivatives(F: Array, dx: float) -> tuple[Array, Array]:
    """First and second derivatives on a uniform grid with 7-point stencils (one-sided at the ends)."""
    n = F.size
    d1, d2 = np.empty(n), np.empty(n)
    for i in range(n):
        start = min(max(i - STENCIL // 2, 0), n - STENCIL)
        offs = np.arange(start, start + STENCIL) - i
        win = F[start : start + STENCIL]
        d1[i] = _stencil_weights(offs, 1) @ win / dx
        d2[i] = _stencil_weights(offs, 2) @ win / dx**2
    return d1, d2


def radial_average_reduce(f_samples, radii, alpha: float) -> RadialProfile:
    """Average ``f(r, phi)`` over phi and evaluate the Riccati residual of ``s = F_r``.

    ``f_samples[i, j]`` is ``f(radii[i], 2 pi j / n_phi)``; radii must be
    regular in log r. Returns ``R = s' + alpha s^2 + s/r + 4 alpha / r^2``.
    """
    f = np.asarray(f_samples, dtype=float)
    r = np.asarray(radii, dtype=float)
    if f.ndim != 2 or f.shape[0] != r.size:
        raise ValueError("f_samples must have shape (len(radii), n_phi)")
    if r.size < STENCIL:
        raise ValueError(f"need at least {STENCIL} radii")
    x = np.log(r)
    dx = np.diff(x)
    if np.any(dx <= 0) or np.max(np.abs(dx - dx[0])) > 1e-9 * max(1.0, abs(dx[0])):
        raise ValueError("radii must be increasing and regular in log r")
    # periodic trapezoid rule is the plain mean
    F = f.mean(axis=1)
    Fx, Fxx = _derivatives(F, float(x[-1] - x[0]) / (r.size - 1))
    s = Fx / r
    ds = (Fxx - Fx) / r**2
    return RadialProfile(r, F, s, ds, ds + alpha * s**2 + s / r + 4 * alpha / r**2)


# ---------------------------------------------------------------------------
# index search


class WeightFamily(Protocol):
    def candidates(self, eta: float) -> Iterable[Callable[[], Weight]]:
        """Builders of the weights to try at ``eta``; a builder may raise InfeasibleError."""


@dataclass
class IndexSearch:
    eta_star: float
    witness: Optional[Weight]
    vacuous: bool = False
    diagnostic: str = ""
    probes: list = field(default_factory=list)


def sup_index_search(
    spec: DomainSpec,
    family: WeightFamily,
    tol: float = 1e-3,
    eta_max: float = 0.999,
    grid: tuple = (32, 4),
    n_boundary: int = 64,
    seed: int = 0,
) -> IndexSearch:
    """Largest eta at which some family member satisfies the criterion on the degenerate set.

    Feasibility is monotone in eta, so bisection applies.
    """
    if spec.sigma is not None:
        points = spec.sigma(*grid)
    else:
        rng = np.random.default_rng(seed)
        points = spec.boundary_sampler(rng, n_boundary)
    probe = [cpoint(p) for p in points]
    sigma_pts = []
    for p in probe:
        L = tangent_field_c2(spec.r, p)
        if hess_pair(complex_hessian(spec.r, p), L, L).real <= SIGMA_TOL:
            sigma_pts.append(p)
    if not sigma_pts:
        return IndexSearch(eta_max, None, vacuous=True, diagnostic="degenerate set empty on sampled boundary")

    probes = []

    def feasible(eta):
        for psi in _safe_candidates(family, eta):
            try:
                rep = criterion_sweep(spec, psi, eta, sigma_pts)
            except EvaluationError as exc:
                log.debug("candidate %s failed at eta=%g: %s", psi.name, eta, exc)
                continue
            if rep.feasible:
                probes.append((eta, True, rep.max_value))
                return psi
        probes.append((eta, False, None))
        return None

    w = feasible(eta_max)
    if w is not None:
        return IndexSearch(eta_max, w, probes=probes)
    lo, hi, witness = 0.0, eta_max, None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        w = feasible(mid)
        if w is not None:
            lo, witness = mid, w
        else:
            hi = mid
    if witness is None:
        return IndexSearch(0.0, None, diagnostic=f"no feasible member for eta >= {hi:g}", probes=probes)
    return IndexSearch(lo, witness, probes=probes)


def _safe_candidates(family: WeightFamily, eta: float):
    for build in family.candidates(eta):
        try:
            yield build()
        except InfeasibleError as exc:
            log.debug("infeasible candidate at eta=%g: %s", eta, exc)
