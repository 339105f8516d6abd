"""Acceptance criteria 1-9, each run at its stated tolerance and reported as one PASS/FAIL line."""

import csv
import io
import json
import math
import time

import numpy as np
import pytest

from dfx.calculus import (
    complex_hessian,
    exp_weighted,
    grad_norm,
    hess_pair,
    holomorphic_derivative,
    normal_field,
    normal_limit,
    normal_vector_field,
    tangent_field_c2,
    tangent_vector_field,
    third_order,
    wirtinger_grad,
)
from dfx.cli import main
from dfx.criterion import InfeasibleError, criterion_general, criterion_worm, eta_from_alpha
from dfx.domains import WormParams, ball_defining, validate_defining, worm_defining, worm_sigma_grid
from dfx.psh import check_psh_grid, default_samples, discriminant, scan_quadratic
from dfx.riccati import (
    RiccatiParams,
    RiccatiSolution,
    StrictMarginBuilder,
    build_psi_radial,
    closed_form,
    comparison_check,
    integrate,
    max_alpha,
    residual,
    worm_index,
)

pytestmark = pytest.mark.acceptance

BETAS = [0.6 * math.pi, 0.75 * math.pi, math.pi, 1.5 * math.pi, 2 * math.pi, 4 * math.pi]
PI = WormParams(math.pi)


def test_criterion_1_index_reproduction(acceptance):
    errs, times = [], []
    for beta in BETAS:
        t = time.perf_counter()
        idx = worm_index(beta)
        times.append(time.perf_counter() - t)
        errs.append(abs(idx - math.pi / (2 * beta)))
    ok = max(errs) <= 1e-6 and max(times) < 1.0
    acceptance(1, ok, f"worm_index max abs err {max(errs):.2e} (<= 1e-6), slowest {max(times):.3f}s (< 1s)")


def test_criterion_2_upper_bound_mechanism(acceptance):
    errs = [abs(max_alpha(beta, tol=1e-9) * (2 * beta - math.pi) - math.pi) for beta in BETAS]
    acceptance(2, max(errs) <= 2e-6, f"max |max_alpha (2 beta - pi) - pi| = {max(errs):.2e} (<= 2e-6)")


def test_criterion_3_lower_bound_certificate(acceptance, capsys):
    build_psi_radial(0.99, math.pi / 2, math.pi)
    code = main(["criterion", "--beta", repr(math.pi), "--alpha", "0.99", "--theta", repr(math.pi / 2), "--grid", "256x16"])
    out, err = capsys.readouterr()
    summary = json.loads(err.strip().splitlines()[-1])
    n_rows = len(list(csv.reader(io.StringIO(out)))) - 1
    try:
        build_psi_radial(1.01, math.pi / 2, math.pi)
        infeasible = False
    except InfeasibleError:
        infeasible = True
    ok = code == 0 and n_rows == 256 * 16 and summary["max_value"] <= 1e-8 and infeasible
    acceptance(
        3,
        ok,
        f"alpha=0.99 max over {n_rows} points {summary['max_value']:.2e} (<= 1e-8), exit {code}; "
        f"alpha=1.01 infeasible: {infeasible}",
    )


def test_criterion_4_reduction_fidelity(acceptance):
    spec = worm_defining(PI)
    alpha = 0.8
    eta = eta_from_alpha(alpha)
    weights = [
        build_psi_radial(0.5, math.pi / 2, math.pi),
        build_psi_radial(0.8, math.pi / 2, math.pi),
        build_psi_radial(0.7, 1.3, math.pi),
    ]
    worst = 0.0
    for psi in weights:
        for p in worm_sigma_grid(PI, 64, 16):
            w = p[1]
            polar = criterion_worm(PI, psi, alpha, abs(w), math.atan2(w.imag, w.real))
            worst = max(worst, abs(criterion_general(spec, psi, eta, p) - polar))
    acceptance(4, worst <= 1e-6, f"general vs polar max diff {worst:.2e} over 3 weights x 64x16 grid (<= 1e-6)")


def test_criterion_5_boundary_identities(acceptance):
    spec = worm_defining(PI)
    r = spec.r
    pts = worm_sigma_grid(PI, 25, 4)
    analytic, d3 = 0.0, 0.0
    for p in pts:
        N, L = normal_field(r, p), tangent_field_c2(r, p)
        H = complex_hessian(r, p)
        g = wirtinger_grad(r, p)
        analytic = max(
            analytic,
            abs(grad_norm(r, p) - 2),
            abs(np.dot(N, g) - 1),
            abs(hess_pair(H, L, L)),
            abs(abs(hess_pair(H, N, L)) - 1 / abs(p[1])),
        )
        d3 = max(d3, abs(third_order(r, normal_vector_field(r), tangent_vector_field(r), p)))
    ok = len(pts) == 100 and analytic <= 1e-8 and d3 <= 2e-4
    acceptance(5, ok, f"{len(pts)} Sigma points: analytic identities max err {analytic:.2e} (<= 1e-8), |D3| max {d3:.2e} (<= 2e-4)")


def test_criterion_6_limit_identities(acceptance):
    spec = worm_defining(PI)
    psi = build_psi_radial(0.5, math.pi / 2, math.pi)
    rho = exp_weighted(spec.r, psi)

    def lbar_rho(x):
        return np.conj(np.dot(tangent_field_c2(spec.r, x), wirtinger_grad(rho, x)))

    def hess_ll(x):
        L = tangent_field_c2(spec.r, x)
        return hess_pair(complex_hessian(rho, x), L, L).real

    pts = worm_sigma_grid(PI, 10, 2)
    worst = 0.0
    for p in pts:
        N = normal_field(spec.r, p)
        den = -holomorphic_derivative(rho, p, N, 1e-5)
        for q in (lbar_rho, hess_ll):
            rhs = holomorphic_derivative(q, p, N, 1e-5) / den
            worst = max(worst, abs(normal_limit(q, rho, p).value - rhs))
    acceptance(6, len(pts) == 20 and worst <= 1e-4, f"{len(pts)} Sigma points, both identities, max diff {worst:.2e} (<= 1e-4)")


def test_criterion_7_psh_spot_check(acceptance):
    spec = worm_defining(PI)
    samples = default_samples(spec)
    psi = StrictMarginBuilder(math.pi)(0.45)
    good = check_psh_grid(spec, psi, 0.45, samples)
    bad = check_psh_grid(spec, psi, 0.55, samples)
    witness = bad.delta_witness
    ok = (
        good.n_samples >= 500
        and good.min_eigenvalue >= -1e-7
        and bad.delta_max > 0
        and witness is not None
        and witness.depth <= 1e-3
    )
    acceptance(
        7,
        ok,
        f"eta=0.45 min eig {good.min_eigenvalue:.2e} over {good.n_samples} samples (>= -1e-7); "
        f"eta=0.55 same weight Delta {bad.delta_max:.3e} > 0 at depth {witness.depth if witness else None} (<= 1e-3); "
        f"scope: {good.note}",
    )


def _subsolution_case(rng):
    """closed_form - eps/t on an interval where it satisfies the differential inequality."""
    a, b, eps = rng.uniform(0.2, 3), rng.uniform(0.2, 3), rng.uniform(0.01, 0.5)
    p = RiccatiParams(a, b, math.pi / 2)
    arg_max = math.atan2(p.amplitude, eps) - 0.05
    t0 = math.exp((0.3 - p.theta) / p.frequency)
    t1 = math.exp((arg_max - p.theta) / p.frequency)
    if not t1 > 1.01 * t0:
        return None
    t = np.geomspace(t0, t1, 400)
    fn = lambda x: closed_form(p, x) - eps / x  # noqa: E731
    return p, RiccatiSolution(t, np.array([fn(x) for x in t]), fn=fn)


def test_criterion_8_oracle_suites(acceptance):
    rng = np.random.default_rng(2024)
    parts = {}

    reps = [validate_defining(s, n_samples=100, seed=3) for s in (worm_defining(PI), worm_defining(WormParams(2 * math.pi)), ball_defining())]
    deriv = max(max(r.max_grad_rel_err, r.max_hess_rel_err) for r in reps)
    parts["derivatives"] = (all(r.passed for r in reps) and deriv <= 1e-6, f"analytic vs FD rel err {deriv:.1e}")

    worst, n = 0.0, 0
    while n < 1000:
        p = RiccatiParams(rng.uniform(0.1, 4), rng.uniform(0.1, 4), rng.uniform(0, 2 * math.pi))
        t = rng.uniform(0.5, 4)
        arg = p.frequency * math.log(t) + p.theta
        if abs(arg - math.pi * round(arg / math.pi)) <= 0.5:
            continue
        h = 2e-4 * t
        ds = (-closed_form(p, t + 2 * h) + 8 * closed_form(p, t + h) - 8 * closed_form(p, t - h) + closed_form(p, t - 2 * h)) / (12 * h)
        worst = max(worst, abs(residual(p, t, closed_form(p, t), ds)))
        n += 1
    parts["ode residual"] = (worst <= 1e-8, f"ODE residual {worst:.1e} over {n} draws")

    worst = 0.0
    for _ in range(5):
        p = RiccatiParams(rng.uniform(0.2, 3), rng.uniform(0.2, 3), rng.uniform(0.5, 1.0))
        t1 = math.exp((math.pi - 0.3 - p.theta) / p.frequency)
        sol = integrate(p, closed_form(p, 1.0), 1.0, min(t1, 2.0), 1e-4)
        worst = max(worst, max(abs(s - closed_form(p, t)) for t, s in zip(sol.t, sol.s)))
    parts["integrate"] = (worst <= 1e-6, f"integrate vs closed form {worst:.1e}")

    n = mismatch = 0
    while n < 1000:
        a_ll, mod, phase, a_nn = rng.uniform(-10, 10), rng.uniform(0, 10), rng.uniform(0, 2 * math.pi), rng.uniform(0.05, 10)
        a_ln = mod * complex(math.cos(phase), math.sin(phase))
        delta, verdict = discriminant(a_ll, a_ln, a_nn)
        if abs(delta) < 1e-3:
            continue
        mismatch += (verdict == "positive") != (scan_quadratic(a_ll, a_ln, a_nn) > 0)
        n += 1
    parts["discriminant"] = (mismatch == 0, f"discriminant mismatches {mismatch}/{n}")

    n = dominated = 0
    while n < 100:
        case = _subsolution_case(rng)
        if case is None:
            continue
        p, sub = case
        dominated += comparison_check(sub, p).dominated
        n += 1
    parts["comparison"] = (dominated == n, f"dominated {dominated}/{n} sub-solutions")

    ok = all(v[0] for v in parts.values())
    acceptance(8, ok, "; ".join(v[1] for v in parts.values()))


def test_criterion_9_continuum(acceptance, capsys):
    code = main(["sweep", "--steps", "20"])
    out, _ = capsys.readouterr()
    rows = [[float(x) for x in r] for r in list(csv.reader(io.StringIO(out)))[1:]]
    idx = [r[2] for r in rows]
    err = max(r[4] for r in rows)
    ok = (
        code == 0
        and len(rows) == 20
        and all(x > y for x, y in zip(idx, idx[1:]))
        and abs(idx[0] - 5 / 6) <= 1e-6
        and abs(idx[-1] - 0.125) <= 1e-6
        and err <= 1e-6
    )
    acceptance(9, ok, f"20 betas, index {idx[0]:.6f} -> {idx[-1]:.6f} strictly decreasing, max abs err {err:.1e} (<= 1e-6)")
