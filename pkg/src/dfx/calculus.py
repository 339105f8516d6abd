"""Complex differential calculus for real scalar fields on C^n.

Conventions used throughout the package:

* Wirtinger derivatives ``df/dz_j = (df/dx_j - i df/dy_j) / 2``.
* Complex Hessian ``H[j, k] = d^2 f / dz_j dzbar_k``, paired as a plain sum
  ``Hess_f(X, Y) = sum_jk H[j, k] X_j conj(Y_k)``.
* Hermitian metric on (1,0) vectors ``g(X, Y) = sum_j X_j conj(Y_j) / 2``.
* Gradient norm ``||grad f|| = 2 sqrt(sum_j |df/dz_j|^2)``.

Points and (1,0) vectors are plain complex numpy arrays of length n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

Array = np.ndarray
VectorField = Callable[[Array], Array]

FIRST_STEP = 1e-5
SECOND_STEP = 1e-4
THIRD_STEP = 1e-3
DEFAULT_DEPTHS = tuple(1e-2 * 2.0 ** -k for k in range(7))


class EvaluationError(ArithmeticError):
    """A field produced a non-finite sample or was evaluated off its domain."""


class DomainError(EvaluationError):
    pass


class DegeneratePointError(ValueError):
    """The gradient of a defining function vanishes at the requested point."""


class PreconditionError(ValueError):
    pass


class StepSizeError(RuntimeError):
    pass


class NoConvergenceError(RuntimeError):
    def __init__(self, message: str, sequence: Sequence[complex]):
        super().__init__(message)
        self.sequence = list(sequence)


def cpoint(coords) -> Array:
    """Validate and convert coordinates to a complex point with n >= 2."""
    p = np.asarray(coords, dtype=complex).reshape(-1)
    if p.size < 2:
        raise ValueError(f"points need at least 2 complex coordinates, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite coordinates: {p}")
    return p


def unit(n: int, j: int) -> Array:
    e = np.zeros(n, dtype=complex)
    e[j] = 1.0
    return e


@dataclass(frozen=True)
class ScalarField:
    """A real-valued function on C^n with optional analytic derivatives.

    ``grad`` returns the n Wirtinger derivatives ``df/dz_j``; ``hess`` returns
    the n x n matrix ``d^2 f / dz_j dzbar_k``.
    """

    value: Callable[[Array], float]
    grad: Optional[Callable[[Array], Array]] = None
    hess: Optional[Callable[[Array], Array]] = None
    name: str = ""

    def __call__(self, p) -> float:
        return float(self.value(p))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        grad = hess = None
        if self.grad is not None and other.grad is not None:
            grad = lambda p: self.grad(p) + other.grad(p)  # noqa: E731
        if self.hess is not None and other.hess is not None:
            hess = lambda p: self.hess(p) + other.hess(p)  # noqa: E731
        return ScalarField(
            lambda p: self.value(p) + other.value(p),
            grad,
            hess,
            name=f"({self.name} + {other.name})",
        )

    def scaled(self, c: float) -> "ScalarField":
        grad = None if self.grad is None else (lambda p: c * self.grad(p))
        hess = None if self.hess is None else (lambda p: c * self.hess(p))
        return ScalarField(lambda p: c * self.value(p), grad, hess, name=f"{c}*{self.name}")

    def numeric(self) -> "ScalarField":
        """Copy of this field with the analytic callbacks dropped."""
        return ScalarField(self.value, name=self.name)


def exp_weighted(r: ScalarField, psi: ScalarField) -> ScalarField:
    """The defining function ``rho = r * exp(psi)`` with product-rule derivatives."""

    def value(p):
        return r.value(p) * np.exp(psi.value(p))

    grad = hess = None
    if r.grad is not None and psi.grad is not None:

        def grad(p):
            e = np.exp(psi.value(p))
            return e * (r.grad(p) + r.value(p) * psi.grad(p))

    if grad is not None and r.hess is not None and psi.hess is not None:

        def hess(p):
            e = np.exp(psi.value(p))
            rv, rg, pg = r.value(p), r.grad(p), psi.grad(p)
            # d_j dbar_k (r e^psi); conj of a (1,0) derivative is the (0,1) one
            return e * (
                r.hess(p)
                + np.outer(rg, pg.conj())
                + np.outer(pg, rg.conj())
                + rv * np.outer(pg, pg.conj())
                + rv * psi.hess(p)
            )

    return ScalarField(value, grad, hess, name=f"{r.name}*exp({psi.name})")


def _sample(f: Callable[[Array], float], q: Array, label: str) -> float:
    v = f(q)
    if not np.all(np.isfinite(v)):
        raise EvaluationError(f"non-finite sample {v!r} at {label} (point {q})")
    return v


def _coord_label(j: int, imag: bool) -> str:
    return f"{'y' if imag else 'x'}_{j + 1}"


def first_step(p: Array) -> float:
    return FIRST_STEP * max(1.0, float(np.linalg.norm(p)))


def second_step(p: Array) -> float:
    return SECOND_STEP * max(1.0, float(np.linalg.norm(p)))


def wirtinger_grad(f: ScalarField, p, h: Optional[float] = None, analytic: bool = True) -> Array:
    """Wirtinger gradient ``(df/dz_1, ..., df/dz_n)`` at ``p``.

    The analytic callback is used when present unless ``analytic`` is False;
    otherwise central differences with step ``h`` along each real axis.
    """
    p = cpoint(p)
    if analytic and f.grad is not None:
        g = np.asarray(f.grad(p), dtype=complex)
        if not np.all(np.isfinite(g)):
            raise EvaluationError(f"non-finite analytic gradient at {p}")
        return g
    h = first_step(p) if h is None else h
    if h <= 0:
        raise ValueError("step must be positive")
    n = p.size
    out = np.empty(n, dtype=complex)
    for j in range(n):
        e = unit(n, j)
        fx = (_sample(f.value, p + h * e, _coord_label(j, False))
              - _sample(f.value, p - h * e, _coord_label(j, False))) / (2 * h)
        fy = (_sample(f.value, p + 1j * h * e, _coord_label(j, True))
              - _sample(f.value, p - 1j * h * e, _coord_label(j, True))) / (2 * h)
        out[j] = 0.5 * (fx - 1j * fy)
    return out


def hermitize(H: Array) -> Array:
    H = np.asarray(H, dtype=complex)
    return 0.5 * (H + H.conj().T)


def real_hessian(f: ScalarField, p, h: float) -> Array:
    """Central-difference Hessian in real coordinates (x_1, y_1, ..., x_n, y_n)."""
    p = cpoint(p)
    n = p.size
    dirs = [unit(n, k // 2) * (1j if k % 2 else 1.0) for k in range(2 * n)]
    labels = [_coord_label(k // 2, bool(k % 2)) for k in range(2 * n)]
    f0 = _sample(f.value, p, "center")
    D = np.empty((2 * n, 2 * n))
    for a in range(2 * n):
        fp = _sample(f.value, p + h * dirs[a], labels[a])
        fm = _sample(f.value, p - h * dirs[a], labels[a])
        D[a, a] = (fp - 2 * f0 + fm) / h**2
        for b in range(a):
            da, db = h * dirs[a], h * dirs[b]
            lab = f"{labels[a]},{labels[b]}"
            D[a, b] = D[b, a] = (
                _sample(f.value, p + da + db, lab)
                - _sample(f.value, p + da - db, lab)
                - _sample(f.value, p - da + db, lab)
                + _sample(f.value, p - da - db, lab)
            ) / (4 * h**2)
    return D


def complex_hessian(f: ScalarField, p, h: Optional[float] = None, analytic: bool = True) -> Array:
    """Hermitian matrix of mixed Wirtinger derivatives ``d^2 f / dz_j dzbar_k``."""
    p = cpoint(p)
    if analytic and f.hess is not None:
        H = np.asarray(f.hess(p), dtype=complex)
        if not np.all(np.isfinite(H)):
            raise EvaluationError(f"non-finite analytic Hessian at {p}")
        return hermitize(H)
    h = second_step(p) if h is None else h
    if h <= 0:
        raise ValueError("step must be positive")
    D = real_hessian(f, p, h)
    n = p.size
    H = np.empty((n, n), dtype=complex)
    for j in range(n):
        for k in range(n):
            xx, yy = D[2 * j, 2 * k], D[2 * j + 1, 2 * k + 1]
            xy, yx = D[2 * j, 2 * k + 1], D[2 * j + 1, 2 * k]
            H[j, k] = 0.25 * ((xx + yy) + 1j * (xy - yx))
    return hermitize(H)


def hess_pair(H: Array, X: Array, Y: Array) -> complex:
    H = np.asarray(H)
    X = np.asarray(X)
    Y = np.asarray(Y)
    if H.shape != (X.size, Y.size):
        raise ValueError(f"dimension mismatch: H {H.shape}, X {X.shape}, Y {Y.shape}")
    return complex(X @ H @ Y.conj())


def metric(X: Array, Y: Array) -> complex:
    return complex(0.5 * np.vdot(Y, X))


def apply_field(X: Array, grad: Array) -> complex:
    """``X f = sum_j X_j df/dz_j`` for a (1,0) vector and a Wirtinger gradient."""
    return complex(np.dot(X, grad))


def grad_norm(f: ScalarField, p) -> float:
    g = wirtinger_grad(f, p)
    return 2.0 * float(np.sqrt(np.sum(np.abs(g) ** 2)))


def _gradient_scale(r: ScalarField, p: Array) -> tuple[Array, float]:
    g = wirtinger_grad(r, p)
    s = float(np.sqrt(np.sum(np.abs(g) ** 2)))
    if not s > 1e-14:
        raise DegeneratePointError(f"gradient of {r.name or 'r'} vanishes at {p}")
    return g, s


def normal_field(r: ScalarField, p) -> Array:
    """Components of ``N_r = sum_j (dr/dzbar_j) d/dz_j / |dr/dz|``."""
    p = cpoint(p)
    g, s = _gradient_scale(r, p)
    N = g.conj() / s
    if abs(apply_field(N, g) - s) > 1e-8 * max(1.0, s):
        raise ArithmeticError("N_r r != ||grad r|| / 2")
    return N


def tangent_field_c2(r: ScalarField, p) -> Array:
    """The global (1,0) tangent field ``(r_w, -r_z) / |dr/dz|`` in C^2."""
    p = cpoint(p)
    if p.size != 2:
        raise ValueError("tangent_field_c2 is defined on C^2 only")
    g, s = _gradient_scale(r, p)
    L = np.array([g[1], -g[0]]) / s
    if abs(apply_field(L, g)) > 1e-10 * max(1.0, s):
        raise ArithmeticError("L r != 0")
    return L


def normal_vector_field(r: ScalarField) -> VectorField:
    return lambda q: normal_field(r, q)


def tangent_vector_field(r: ScalarField) -> VectorField:
    return lambda q: tangent_field_c2(r, q)


def inward_normal(r: ScalarField, p) -> Array:
    """Euclidean unit inward normal, as a complex displacement vector."""
    p = cpoint(p)
    g, s = _gradient_scale(r, p)
    return -g.conj() / s


def holomorphic_derivative(F: Callable[[Array], complex], p: Array, X: Array, h: float) -> complex:
    """``X F = sum_j X_j dF/dz_j`` by central differences along X and iX.

    Works for complex-valued, non-holomorphic F (and for array-valued F).
    """
    d_re = (np.asarray(F(p + h * X)) - np.asarray(F(p - h * X))) / (2 * h)
    d_im = (np.asarray(F(p + 1j * h * X)) - np.asarray(F(p - 1j * h * X))) / (2 * h)
    return 0.5 * (d_re - 1j * d_im)


def third_order(
    r: ScalarField,
    N: VectorField,
    L: Union[VectorField, Array],
    p,
    h: float = THIRD_STEP,
    conv_tol: float = 1e-2,
) -> complex:
    """``g(nabla_L nabla_N nabla r, L)`` in the plain-sum normalization.

    With ``W_k(q) = sum_m N_m(q) r_{m kbar}(q)`` this is
    ``sum_jk L_j dW_k/dz_j conj(L_k)``, with L frozen at ``p`` and the (1,0)
    derivative of W taken by central differences. Two step sizes are combined
    by Richardson extrapolation; disagreement beyond ``conv_tol`` (relative,
    floor 1) means the step is noise-dominated and raises StepSizeError.
    """
    p = cpoint(p)
    L0 = np.asarray(L(p) if callable(L) else L, dtype=complex)

    def W(q):
        return np.asarray(N(q)) @ complex_hessian(r, q)

    def d3(step):
        dW = holomorphic_derivative(W, p, L0, step)
        return complex(dW @ L0.conj())

    coarse, fine = d3(h), d3(h / 2)
    if not (np.isfinite(coarse) and np.isfinite(fine)):
        raise EvaluationError(f"non-finite third-order term at {p}")
    if abs(coarse - fine) > conv_tol * max(1.0, abs(fine)):
        raise StepSizeError(
            f"third-order term not converging at h={h}: {coarse} vs {fine}"
        )
    return (4 * fine - coarse) / 3


@dataclass
class LimitResult:
    value: complex
    error: float
    raw: list = field(default_factory=list)
    depths: list = field(default_factory=list)


def richardson_to_zero(depths: Sequence[float], values: Sequence[complex]) -> tuple[complex, float]:
    """Polynomial (Neville) extrapolation of ``values(depth)`` to depth 0.

    Returns the best diagonal estimate and its error estimate, chosen the way
    Ridders' method does: the entry whose neighbours it agrees with best.
    """
    t = np.asarray(depths, dtype=float)
    n = len(t)
    T = [[complex(values[0])]]
    best, best_err = complex(values[0]), np.inf
    for k in range(1, n):
        row = [complex(values[k])]
        for j in range(1, k + 1):
            prev = row[j - 1]
            up = T[k - 1][j - 1]
            row.append(prev + (prev - up) * t[k] / (t[k - j] - t[k]))
            err = max(abs(row[j] - row[j - 1]), abs(row[j] - up))
            if err <= best_err:
                best, best_err = row[j], err
        T.append(row)
    return best, float(best_err)


def normal_limit(
    q: Callable[[Array], complex],
    r: ScalarField,
    p,
    schedule: Optional[Sequence[float]] = None,
    zero_tol: float = 1e-8,
) -> LimitResult:
    """Limit of ``q / (-r)`` approaching boundary point ``p`` along the inward normal."""
    p = cpoint(p)
    depths = list(DEFAULT_DEPTHS if schedule is None else schedule)
    if len(depths) < 2 or any(t <= 0 for t in depths) or any(
        b >= a for a, b in zip(depths, depths[1:])
    ):
        raise PreconditionError("depth schedule must be positive and strictly decreasing")
    q0 = q(p)
    if abs(q0) > zero_tol:
        raise PreconditionError(f"q(p) = {q0} is not zero; the limit is not of 0/0 type")
    nu = inward_normal(r, p)
    raw = []
    for t in depths:
        x = p + t * nu
        raw.append(complex(q(x)) / (-r.value(x)))
    if not np.all(np.isfinite(raw)):
        raise NoConvergenceError("non-finite value in the normal limit sequence", raw)
    diffs = np.abs(np.diff(raw))
    floor = 1e-9 * max(1.0, max(abs(v) for v in raw))
    # a smooth limit has successive differences shrinking with the depth steps
    if np.any(diffs[1:] > diffs[:-1] + floor):
        raise NoConvergenceError("normal limit sequence does not contract", raw)
    value, err = richardson_to_zero(depths, raw)
    if abs(value.imag) <= 1e-300:
        value = complex(value.real, 0.0)
    return LimitResult(value, err, raw, depths)


def min_eig_hermitian(H: Array, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Closed form for 2x2; cyclic Jacobi on the real 2n x 2n embedding otherwise.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"square matrix required, got shape {H.shape}")
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * max(1.0, np.max(np.abs(H))):
        raise ValueError("matrix is not Hermitian within tolerance")
    H = hermitize(H)
    n = H.shape[0]
    if n == 1:
        return float(H[0, 0].real)
    if n == 2:
        a, d, b = H[0, 0].real, H[1, 1].real, H[0, 1]
        return float(0.5 * (a + d) - np.hypot(0.5 * (a - d), abs(b)))
    A, B = H.real, H.imag
    return float(min(jacobi_eigenvalues(np.block([[A, -B], [B, A]]))))


def jacobi_eigenvalues(S: Array, tol: float = 1e-12, max_sweeps: int = 100) -> Array:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    scale = max(1.0, np.max(np.abs(A)))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                if abs(A[i, j]) <= 1e-18 * scale:
                    continue
                theta = (A[j, j] - A[i, i]) / (2 * A[i, j])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(1 + theta * theta))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                J = np.eye(n)
                J[i, i] = J[j, j] = c
                J[i, j], J[j, i] = s, -s
                A = J.T @ A @ J
    else:
        raise NoConvergenceError("Jacobi iteration did not converge", list(np.diag(A)))
    return np.sort(np.diag(A))
