"""Sampling check that ``-(-rho)^eta`` is plurisubharmonic near the boundary, with ``rho = r e^psi``."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .calculus import (
    Array,
    EvaluationError,
    PreconditionError,
    ScalarField,
    complex_hessian,
    cpoint,
    exp_weighted,
    hess_pair,
    inward_normal,
    min_eig_hermitian,
    normal_field,
    tangent_field_c2,
    wirtinger_grad,
)
from .criterion import InfeasibleError
from .domains import DomainSpec

log = logging.getLogger(__name__)

PSH_DEPTHS = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
PSD_TOL = 1e-7
SCOPE_NOTE = (
    "sampled check for one weight family near the boundary; it can refute this family "
    "but does not bound the index over all defining functions, which follows from the "
    "Riccati comparison argument (see riccati.max_alpha)"
)


@dataclass
class FrameMatrix:
    """``Hess_rho(X, Y) + (1 - eta)/(-rho) (X rho) conj(Y rho)`` for X, Y in the frame."""

    matrix: Array
    prefactor: float
    rho: float
    basis: tuple

    @property
    def A_LL(self) -> float:
        return float(self.matrix[0, 0].real)

    @property
    def A_LN(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def A_NN(self) -> float:
        return float(self.matrix[1, 1].real)


def frame_at(r: ScalarField, p) -> tuple[Array, Array]:
    """Unitary frame (L, N) of the level set of r through p."""
    return tangent_field_c2(r, p), normal_field(r, p)


def hessian_neg_pow(rho: ScalarField, eta: float, p, basis: Sequence[Array]) -> FrameMatrix:
    """Complex Hessian of ``-(-rho)^eta`` in the given frame, with the factor ``eta (-rho)^(eta-1)`` split off."""
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    p = cpoint(p)
    rv = float(rho(p))
    if not rv < 0:
        raise PreconditionError(f"point is not interior: rho = {rv:.3e}")
    H = complex_hessian(rho, p)
    g = wirtinger_grad(rho, p)
    k = (1 - eta) / (-rv)
    m = len(basis)
    A = np.empty((m, m), dtype=complex)
    # X rho = sum X_j d rho / dz_j
    d = [complex(np.dot(X, g)) for X in basis]
    for i, X in enumerate(basis):
        for j, Y in enumerate(basis):
            A[i, j] = hess_pair(H, X, Y) + k * d[i] * d[j].conjugate()
    A = 0.5 * (A + A.conj().T)
    return FrameMatrix(A, eta * (-rv) ** (eta - 1), rv, tuple(basis))


def neg_pow(rho: ScalarField, eta: float) -> ScalarField:
    """``-(-rho)^eta`` as a plain scalar field (for finite-difference cross-checks)."""
    return ScalarField(lambda p: -((-rho(p)) ** eta), name=f"-(-{rho.name})^{eta}")


def discriminant(A_LL: float, A_LN: complex, A_NN: float) -> tuple[float, str]:
    """``|A_LN|^2 - A_LL A_NN`` and whether the 2x2 form is positive for every direction.

    Verdicts: ``"positive"`` (Delta < 0), ``"semidefinite"`` (Delta == 0),
    ``"indefinite"`` (Delta > 0).
    """
    if not A_NN > 0:
        raise PreconditionError(f"A_NN must be positive, got {A_NN}")
    delta = abs(A_LN) ** 2 - A_LL * A_NN
    if delta < 0:
        return delta, "positive"
    if delta == 0:
        return delta, "semidefinite"
    return delta, "indefinite"


def scan_quadratic(A_LL: float, A_LN: complex, A_NN: float, n: int = 100_000, xi_max: float = 1e3) -> float:
    """Brute-force minimum of ``Q(1, xi e^{i t})`` over a log grid of ``xi = |b/a|`` in ``[0, xi_max]``.

    The phase is taken at its worst case, ``A_LN e^{-i t}`` real negative.
    """
    xi = np.concatenate([[0.0], np.logspace(-6, math.log10(xi_max), n)])
    return float(np.min(A_LL - 2 * xi * abs(A_LN) + A_NN * xi**2))


@dataclass
class SampleSet:
    points: list
    depths: list
    base: list
    schedule: tuple
    skipped: int = 0


def interior_sampler(spec: DomainSpec, points, depths: Sequence[float] = PSH_DEPTHS) -> SampleSet:
    """Points ``p + t * inward normal`` for boundary points p and depths t; escapes are skipped."""
    depths = tuple(float(t) for t in depths)
    if not depths or any(not t > 0 for t in depths):
        raise PreconditionError(f"depths must be positive, got {depths}")
    out = SampleSet([], [], [], depths)
    for p in points:
        p = cpoint(p)
        nu = inward_normal(spec.r, p)
        for t in depths:
            q = p + t * nu
            try:
                ok = spec.r(q) < 0
            except EvaluationError:
                ok = False
            if ok:
                out.points.append(q)
                out.depths.append(t)
                out.base.append(p)
            else:
                out.skipped += 1
    return out


@dataclass
class Witness:
    point: Array
    direction: Array
    depth: float
    value: float


@dataclass
class ExponentCheckReport:
    eta: float
    n_samples: int
    min_eigenvalue: float
    witnesses: list
    depths: tuple
    tol: float
    delta_max: float = -math.inf
    delta_witness: Optional[Witness] = None
    failures: list = field(default_factory=list)
    skipped: int = 0
    note: str = SCOPE_NOTE

    @property
    def passed(self) -> bool:
        return self.n_samples > 0 and self.min_eigenvalue >= -self.tol

    def as_dict(self) -> dict:
        def w(x: Optional[Witness]):
            if x is None:
                return None
            return {
                "point": [[c.real, c.imag] for c in x.point],
                "direction": [[c.real, c.imag] for c in x.direction],
                "depth": x.depth,
                "value": x.value,
            }

        return {
            "eta": self.eta,
            "n_samples": self.n_samples,
            "min_eigenvalue": self.min_eigenvalue,
            "passed": self.passed,
            "tol": self.tol,
            "depths": list(self.depths),
            "witness": w(self.witnesses[0]) if self.witnesses else None,
            "n_witnesses": len(self.witnesses),
            "delta_max": self.delta_max,
            "delta_witness": w(self.delta_witness),
            "evaluation_failures": len(self.failures),
            "skipped": self.skipped,
            "note": self.note,
        }


def _lowest_direction(A: Array) -> Array:
    return np.linalg.eigh(A)[1][:, 0]


def check_psh_grid(spec: DomainSpec, psi: ScalarField, eta: float, samples: SampleSet, tol: float = PSD_TOL) -> ExponentCheckReport:
    """Smallest eigenvalue of the stripped frame matrix over the samples.

    Per-point evaluation errors are recorded and do not abort the check.
    """
    rho = exp_weighted(spec.r, psi)
    rep = ExponentCheckReport(eta, 0, math.inf, [], samples.schedule, tol, skipped=samples.skipped)
    for q, t in zip(samples.points, samples.depths):
        try:
            fm = hessian_neg_pow(rho, eta, q, frame_at(spec.r, q))
        except (EvaluationError, PreconditionError, ArithmeticError) as exc:
            rep.failures.append((q, str(exc)))
            continue
        rep.n_samples += 1
        lam = min_eig_hermitian(fm.matrix)
        rep.min_eigenvalue = min(rep.min_eigenvalue, lam)
        if lam < -tol:
            rep.witnesses.append(Witness(q, _lowest_direction(fm.matrix), t, lam))
        if fm.A_NN > 0:
            delta, _ = discriminant(fm.A_LL, fm.A_LN, fm.A_NN)
            if delta > rep.delta_max:
                rep.delta_max = delta
                rep.delta_witness = Witness(q, _lowest_direction(fm.matrix), t, delta)
    rep.witnesses.sort(key=lambda w: w.value)
    return rep


def default_samples(spec: DomainSpec, grid: tuple = (32, 4), depths=PSH_DEPTHS, n_boundary: int = 128, seed: int = 0) -> SampleSet:
    if spec.sigma is not None:
        points = spec.sigma(*grid)
    else:
        points = spec.boundary_sampler(np.random.default_rng(seed), n_boundary)
    return interior_sampler(spec, points, depths)


def df_exponent_bisect(
    spec: DomainSpec,
    psi_builder: Callable[[float], ScalarField],
    tol: float = 1e-3,
    eta_max: float = 0.999,
    samples: Optional[SampleSet] = None,
) -> float:
    """Largest eta (to tol) at which the built weight passes the sampled check; 0 if none does."""
    samples = samples if samples is not None else default_samples(spec)

    def passes(eta):
        try:
            psi = psi_builder(eta)
        except InfeasibleError as exc:
            log.debug("no weight at eta=%g: %s", eta, exc)
            return False
        return check_psh_grid(spec, psi, eta, samples).passed

    if passes(eta_max):
        return eta_max
    lo, hi = 0.0, eta_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo
