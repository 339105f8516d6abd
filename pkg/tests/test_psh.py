import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dfx.calculus import PreconditionError, complex_hessian, exp_weighted, hess_pair, min_eig_hermitian
from dfx.criterion import alpha_from_eta, zero_weight
from dfx.domains import WormParams
from dfx.psh import (
    PSH_DEPTHS,
    check_psh_grid,
    default_samples,
    df_exponent_bisect,
    discriminant,
    frame_at,
    hessian_neg_pow,
    interior_sampler,
    neg_pow,
    scan_quadratic,
)
from dfx.riccati import StrictMarginBuilder, build_psi_radial

PI = WormParams(math.pi)


def _fd_frame_matrix(rho, eta, p, basis):
    """Frame matrix of the composed function by finite differences, prefactor divided out."""
    h = 3e-3 * (-float(rho(p)))
    H = complex_hessian(neg_pow(rho, eta), p, h=h, analytic=False)
    pref = eta * (-float(rho(p))) ** (eta - 1)
    return np.array([[hess_pair(H, X, Y) for Y in basis] for X in basis]) / pref


# --- frame expansion -----------------------------------------------------------------


def test_ball_positive_definite(ball):
    p = [0.5, 0]
    fm = hessian_neg_pow(ball.r, 0.99, p, frame_at(ball.r, p))
    assert min_eig_hermitian(fm.matrix) > 0
    assert np.allclose(fm.matrix, _fd_frame_matrix(ball.r, 0.99, np.array(p, complex), fm.basis), rtol=1e-4, atol=1e-6)


def test_eta_to_one_gives_plain_hessian(worm_pi):
    p = np.array([0.2 + 0.1j, 1.1 * np.exp(0.3j) * (1 - 1e-2)])
    basis = frame_at(worm_pi.r, p)
    H = complex_hessian(worm_pi.r, p)
    plain = np.array([[hess_pair(H, X, Y) for Y in basis] for X in basis])
    fm = hessian_neg_pow(worm_pi.r, 1 - 1e-12, p, basis)
    assert np.allclose(fm.matrix, plain, atol=1e-8)


def test_rejects_exterior_and_bad_eta(ball):
    basis = frame_at(ball.r, [0.5, 0])
    with pytest.raises(PreconditionError):
        hessian_neg_pow(ball.r, 0.5, [1.0, 0], basis)
    with pytest.raises(ValueError):
        hessian_neg_pow(ball.r, 1.0, [0.5, 0], basis)


def _interior_points(spec, psi):
    samples = interior_sampler(spec, spec.sigma(10, 2), (1e-2, 1e-3))
    rho = exp_weighted(spec.r, psi)
    return rho, [q for q in samples.points if -rho(q) > 1e-4]


@pytest.mark.parametrize("weight", ["zero", "radial"])
def test_frame_matrix_matches_composed_fd(worm_pi, weight):
    psi = zero_weight() if weight == "zero" else build_psi_radial(0.8, math.pi / 2, math.pi)
    rho, pts = _interior_points(worm_pi, psi)
    assert len(pts) >= 40
    for eta in (0.3, 0.7):
        for q in pts:
            fm = hessian_neg_pow(rho, eta, q, frame_at(worm_pi.r, q))
            fd = _fd_frame_matrix(rho, eta, q, fm.basis)
            scale = np.max(np.abs(fm.matrix))
            assert np.max(np.abs(fm.matrix - fd)) <= 1e-4 * scale


def test_frame_matrix_matches_composed_fd_ball(ball, rng):
    pts = interior_sampler(ball, ball.boundary_sampler(rng, 50), (1e-1, 1e-2)).points
    for q in pts:
        fm = hessian_neg_pow(ball.r, 0.6, q, frame_at(ball.r, q))
        fd = _fd_frame_matrix(ball.r, 0.6, q, fm.basis)
        assert np.max(np.abs(fm.matrix - fd)) <= 1e-4 * np.max(np.abs(fm.matrix))


def test_prefactor_positive_and_monotone_in_eta(worm_pi):
    psi = build_psi_radial(0.9, math.pi / 2, math.pi)
    rho, pts = _interior_points(worm_pi, psi)
    for q in pts:
        basis = frame_at(worm_pi.r, q)
        lams = []
        for eta in (0.2, 0.4, 0.6, 0.8):
            fm = hessian_neg_pow(rho, eta, q, basis)
            assert fm.prefactor > 0
            lams.append(min_eig_hermitian(fm.matrix))
        # the rank-one term shrinks as eta grows
        assert all(a >= b - 1e-12 * max(1, abs(a)) for a, b in zip(lams, lams[1:]))


# --- discriminant ------------------------------------------------------------------------


def test_discriminant_examples():
    assert discriminant(1, 0, 1) == (-1, "positive")
    assert discriminant(0, 1, 1) == (1, "indefinite")
    assert discriminant(1, 1, 1)[1] == "semidefinite"
    with pytest.raises(PreconditionError):
        discriminant(1, 0, 0)


@given(
    st.floats(-10, 10),
    st.floats(0, 10),
    st.floats(0, 2 * math.pi),
    st.floats(0.05, 10),
)
@settings(max_examples=1000, deadline=None)
def test_discriminant_matches_brute_force(a_ll, mod, phase, a_nn):
    a_ln = mod * complex(math.cos(phase), math.sin(phase))
    delta, verdict = discriminant(a_ll, a_ln, a_nn)
    assume(abs(delta) >= 1e-3)
    # minimum of the quadratic in xi is -delta / A_NN at xi = |A_LN| / A_NN, inside the scanned range
    q_min = scan_quadratic(a_ll, a_ln, a_nn)
    assert (verdict == "positive") == (q_min > 0)


# --- sampling -------------------------------------------------------------------------------


def test_interior_sampler_examples(ball, worm_pi):
    s = interior_sampler(ball, [np.array([1, 0], complex)], (0.1,))
    assert np.allclose(s.points[0], [0.9, 0])
    assert ball.r(s.points[0]) == pytest.approx(-0.19)
    with pytest.raises(PreconditionError):
        interior_sampler(ball, [np.array([1, 0], complex)], (0.0,))
    s = interior_sampler(worm_pi, worm_pi.sigma(32, 4), (1e-3,))
    assert s.skipped == 0 and len(s.points) == 128
    assert all(worm_pi.r(q) < 0 for q in s.points)


# --- PSH check ---------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def worm_samples(worm_pi):
    return default_samples(worm_pi)


def test_strict_margin_weight_passes(worm_pi, worm_samples):
    psi = StrictMarginBuilder(math.pi)(0.45)
    assert psi.params["alpha"] == pytest.approx((alpha_from_eta(0.45) + 1) / 2)
    rep = check_psh_grid(worm_pi, psi, 0.45, worm_samples)
    assert rep.n_samples >= 500 and not rep.failures
    assert rep.min_eigenvalue >= -1e-7 and rep.passed and not rep.witnesses
    assert rep.depths == PSH_DEPTHS


def test_same_family_fails_past_half(worm_pi, worm_samples):
    psi = StrictMarginBuilder(math.pi)(0.45)
    rep = check_psh_grid(worm_pi, psi, 0.55, worm_samples)
    assert not rep.passed and rep.witnesses
    assert rep.delta_max > 0 and rep.delta_witness.depth <= 1e-3
    w = rep.witnesses[0]
    assert w.value == rep.min_eigenvalue < -1e-7
    assert np.linalg.norm(w.direction) == pytest.approx(1)
    d = rep.as_dict()
    assert d["passed"] is False and "Riccati" in d["note"]


def test_ball_passes(ball):
    rep = check_psh_grid(ball, zero_weight(), 0.99, default_samples(ball))
    assert rep.passed and rep.min_eigenvalue > 0


def test_evaluation_failures_are_recorded(worm_pi, worm_samples):
    from dataclasses import replace

    from dfx.psh import SampleSet

    bad = replace(worm_samples, points=[np.array([0.1, 0.0], complex)] + worm_samples.points[:3], depths=[1e-3] * 4)
    rep = check_psh_grid(worm_pi, zero_weight(), 0.3, bad)
    assert len(rep.failures) == 1 and rep.n_samples == 3
    assert isinstance(bad, SampleSet)


@pytest.mark.parametrize("beta,expected", [(math.pi, 0.5), (2 * math.pi, 0.25)])
def test_bisection_worm(beta, expected):
    from dfx.domains import worm_defining

    spec = worm_defining(WormParams(beta))
    assert df_exponent_bisect(spec, StrictMarginBuilder(beta), tol=1e-3) == pytest.approx(expected, abs=5e-3)


def test_bisection_ball(ball):
    assert df_exponent_bisect(ball, lambda eta: zero_weight()) >= 0.99
