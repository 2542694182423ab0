import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bel.initial_data import (
    BUMP_RADIUS,
    PerturbationParams,
    QuadrupoleParams,
    RhoSpec,
    UnresolvedScaleError,
    beta,
    beta_spectrum_analytic,
    bump,
    bump_gradient,
    chi_hat,
    omega0,
    omega0_values,
    omega0_w1p_quadrature,
    phi0,
)
from bel.modulated import cos_moment
from bel.spectral import GridSpec, sobolev_w1p_norm, transform_forward

P = 2.5


def radial_bump_moments(p):
    """Independent 1D quadrature of ||phi||_p^p and ||d1 phi||_p^p for one bump."""
    a = BUMP_RADIUS

    def g(r):
        s = (r / a) ** 2
        return np.exp(1 - 1 / (1 - s)) if s < 1 else 0.0

    def dg(r):
        s = (r / a) ** 2
        return -g(r) / (1 - s) ** 2 * 2 * r / a**2 if s < 1 else 0.0

    val = 2 * np.pi * integrate.quad(lambda r: g(r) ** p * r, 0, a, epsabs=0, epsrel=1e-13)[0]
    der = 2 * np.pi * cos_moment(p) * integrate.quad(lambda r: abs(dg(r)) ** p * r, 0, a, epsabs=0, epsrel=1e-13)[0]
    return val, der


def expected_norms(q: QuadrupoleParams):
    val, der = radial_bump_moments(q.p)
    lp = d = 0.0
    for k in q.scales:
        amp = q.prefactor * 2.0 ** ((-1 + 2 / q.p) * k)
        lp += 4 * amp**q.p * 2.0 ** (-2 * k) * val
        d += 4 * (amp * 2.0**k) ** q.p * 2.0 ** (-2 * k) * der
    return lp ** (1 / q.p), d ** (1 / q.p)


@pytest.mark.parametrize("M,N", [(4, 1), (4, 2), (8, 4), (16, 8)])
def test_patch_quadrature_matches_radial_oracle(M, N):
    q = QuadrupoleParams(M=M, N=N, N0=2, p=P)
    r = omega0_w1p_quadrature(q)
    lp, d = expected_norms(q)
    assert r["lp"] == pytest.approx(lp, rel=1e-6)
    assert r["d1"] == pytest.approx(d, rel=1e-6)
    assert r["d2"] == pytest.approx(d, rel=1e-6)


def test_w1p_scales_exactly_like_M_to_minus_two():
    a = omega0_w1p_quadrature(QuadrupoleParams(M=4, N=2))["w1p"]
    b = omega0_w1p_quadrature(QuadrupoleParams(M=8, N=2))["w1p"]
    assert b / a == pytest.approx(0.25, rel=1e-12)


def test_N_dependence_follows_term_count():
    w = {N: omega0_w1p_quadrature(QuadrupoleParams(M=4, N=N))["w1p"] for N in (2, 4, 8)}
    # gradient terms dominate and each scale contributes equally
    for N in (2, 4, 8):
        ratio = w[N] / w[8]
        assert ratio == pytest.approx(((N + 1) / N / (9 / 8)) ** (1 / P), rel=0.02)


def test_omega0_on_grid_matches_quadrature_and_symmetry():
    q = QuadrupoleParams(M=4, N=1, N0=2, p=P)
    g = GridSpec(512, np.pi / 4)
    w = omega0(q, g)
    r = g.reflect_index()
    scale = np.abs(w.values).max()
    assert np.abs(w.values + w.values[r, :]).max() < 1e-14 * scale
    assert np.abs(w.values + w.values[:, r]).max() < 1e-14 * scale
    quad = omega0_w1p_quadrature(q)["w1p"]
    assert sobolev_w1p_norm(w, P) == pytest.approx(quad, rel=1e-3)


@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_omega0_vanishes_outside_dyadic_balls(x1, x2):
    q = QuadrupoleParams(M=4, N=2, N0=2)
    inside = any(
        np.hypot(x1 - c1, x2 - c2) < BUMP_RADIUS * 2.0**-k for k, _, (c1, c2) in q.bump_centres()
    )
    if not inside:
        assert omega0_values(x1, x2, q) == 0.0


def test_phi0_is_odd_in_each_variable():
    x = np.linspace(-1.3, 1.3, 41)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    assert np.allclose(phi0(X1, X2), -phi0(-X1, X2))
    assert np.allclose(phi0(X1, X2), -phi0(X1, -X2))


def test_bump_gradient_matches_finite_difference():
    x1, x2, h = 0.07, -0.11, 1e-6
    g1, g2 = bump_gradient(x1, x2)
    assert g1 == pytest.approx((bump(x1 + h, x2) - bump(x1 - h, x2)) / (2 * h), rel=1e-6)
    assert g2 == pytest.approx((bump(x1, x2 + h) - bump(x1, x2 - h)) / (2 * h), rel=1e-6)


def test_unresolved_finest_scale_is_rejected():
    q = QuadrupoleParams(M=4, N=2, N0=2)
    with pytest.raises(UnresolvedScaleError, match="unresolved finest scale"):
        omega0(q, GridSpec(256, np.pi / 4))


@pytest.mark.parametrize("kw", [{"p": 2.0}, {"p": 3.5}, {"N": 0}, {"M": 1.0}])
def test_invalid_quadrupole_parameters(kw):
    with pytest.raises(ValueError):
        QuadrupoleParams(**kw)


def test_chi_hat_normalisation_and_rho_at_origin():
    val = integrate.quad(lambda r: 2 * np.pi * r * chi_hat(r, 0.0), 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert val == pytest.approx(1.0, abs=1e-12)
    assert float(chi_hat(0.0, 0.0)) <= 1.0
    assert float(RhoSpec().rho(0.0, 0.0)) == pytest.approx(2.0, abs=2e-12)


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("r", [0.05, 0.3, 1.1, 2.7])
def test_radial_chi_against_direct_hankel_quadrature(r):
    from scipy.special import j0

    direct = integrate.quad(lambda s: 2 * np.pi * s * chi_hat(s, 0.0) * j0(2 * np.pi * r * s), 0, 1,
                            epsabs=1e-15, epsrel=1e-13, limit=200)[0]
    assert float(RhoSpec().chi(r)) == pytest.approx(direct, abs=2e-12)


def test_perturbation_parameters():
    pert = PerturbationParams(n=34, p=P)
    assert pert.lam == 102 and pert.k == 9 * 34**2
    assert pert.amplitude == pytest.approx(102 ** (-1 + 2 / P) / 102)
    with pytest.raises(ValueError):
        PerturbationParams(n=2)
    with pytest.raises(ValueError):
        PerturbationParams(n=6, p=4.0)


@pytest.fixture(scope="module")
def beta6():
    pert = PerturbationParams(n=6, p=P, xstar=(0.6, 0.45))
    g = GridSpec(2048, np.pi)
    return pert, g, beta(pert, RhoSpec(), g, method="pointwise")


def test_beta_parities(beta6):
    _, g, b = beta6
    r = g.reflect_index()
    # even in x1, odd in x2; round-off of sin(k x1) at |k x1| ~ 1e3 sets the floor
    scale = np.abs(b.values).max()
    assert np.abs(b.values - b.values[r, :]).max() < 1e-8 * scale
    assert np.abs(b.values + b.values[:, r]).max() < 1e-8 * scale


def test_beta_spectrum_matches_closed_form(beta6):
    pert, g, b = beta6
    c = transform_forward(b)
    m = g.mode_indices() / (2 * g.half_width)
    xi1, xi2 = np.meshgrid(m, m, indexing="ij")
    ref = beta_spectrum_analytic(pert, RhoSpec(), xi1, xi2) / (2 * g.half_width) ** 2
    err = np.linalg.norm(c - ref) / np.linalg.norm(ref)
    assert err <= 1e-6


def test_spectral_and_pointwise_beta_agree(beta6):
    pert, g, b = beta6
    s = beta(pert, RhoSpec(), g, method="spectral")
    assert np.abs(s.values - b.values).max() <= 1e-9 * np.abs(b.values).max()


def test_beta_rejects_unresolved_or_aperiodic_carrier():
    pert = PerturbationParams(n=6)
    with pytest.raises(UnresolvedScaleError, match="unresolved oscillation"):
        beta(pert, RhoSpec(), GridSpec(256, np.pi / 4))
    with pytest.raises(UnresolvedScaleError, match="not periodic"):
        beta(PerturbationParams(n=7), RhoSpec(), GridSpec(1024, np.pi / 4))
