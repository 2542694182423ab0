import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from bel.initial_data import PerturbationParams, RhoSpec, beta
from bel.littlewood_paley import BesovParams, project_block
from bel.modulated import ModulatedField, cos_moment, envelope_grid, modulated_beta, spectrum_oracle_error
from bel.spectral import GridSpec, derivative, lp_norm

RHO = RhoSpec()


@pytest.mark.parametrize("p, want", [(2.0, 0.5), (4.0, 3.0 / 8.0), (0.0, 1.0)])
def test_cos_moment_closed_forms(p, want):
    assert cos_moment(p) == pytest.approx(want, rel=1e-14)


@given(st.floats(0.5, 6.0))
def test_cos_moment_quadrature(p):
    q, _ = integrate.quad(lambda t: abs(np.cos(t)) ** p, 0, 2 * np.pi, limit=200)
    assert cos_moment(p) == pytest.approx(q / (2 * np.pi), rel=1e-8)


def test_plane_wave_envelope():
    g = GridSpec(64, np.pi)
    X1, X2 = g.mesh()
    k = 40.0
    f = ModulatedField(g, np.exp(1j * X2), k)
    assert f.sup() == pytest.approx(1.0)
    assert f.lp(2.0) == pytest.approx(np.sqrt(0.5 * (2 * np.pi) ** 2), rel=1e-12)
    d1 = f.derivative(1)
    assert np.allclose(d1.envelope, 1j * k * f.envelope, atol=1e-10)
    d2 = f.derivative(2)
    assert np.allclose(d2.envelope, 1j * f.envelope, atol=1e-10)
    # velocity of Re(exp(i(k x1 + x2))): |u| = 1 / |kappa|
    u1, u2 = f.velocity()
    assert u1.sup() == pytest.approx(1.0 / np.hypot(k, 1.0) ** 2, rel=1e-10)
    assert u2.sup() == pytest.approx(k / np.hypot(k, 1.0) ** 2, rel=1e-10)


def test_envelope_grid_is_power_of_two():
    pert = PerturbationParams(34)
    g = envelope_grid(pert, RHO)
    assert g.n & (g.n - 1) == 0
    assert g.half_width > 0.2 + 80 / pert.lam - 1e-12


@pytest.fixture(scope="module", params=[(6, 512), (8, 1024)])
def pair(request):
    n, N = request.param
    pert = PerturbationParams(n)
    return pert, beta(pert, RHO, GridSpec(N, np.pi / 4)), modulated_beta(pert, RHO)


def test_envelope_lp_matches_full_grid(pair):
    pert, b, mb = pair
    p = pert.p
    assert mb.lp(p) == pytest.approx(lp_norm(b, p), rel=0.02)
    for axis in (1, 2):
        assert mb.derivative(axis).lp(p) == pytest.approx(lp_norm(derivative(b, axis), p), rel=0.02)


def test_envelope_sup_bounds_grid_sup(pair):
    _, b, mb = pair
    for axis in (None, 1, 2):
        full = b if axis is None else derivative(b, axis)
        env = mb if axis is None else mb.derivative(axis)
        grid_max = np.abs(full.values).max()
        assert grid_max <= env.sup() * (1 + 1e-9)
        assert env.sup() <= 1.1 * grid_max


def test_envelope_blocks_match_full_grid(pair):
    pert, b, mb = pair
    ell = int(np.log2(pert.k))
    for e in (ell - 1, ell, ell + 1):
        assert mb.block(e).lp(2.5) == pytest.approx(lp_norm(project_block(b, e), 2.5), rel=1e-2)


def test_besov_concentrates_near_carrier(pair):
    pert, _, mb = pair
    res = mb.besov(BesovParams(0.0, np.inf, 1.0))
    ells, norms = mb.block_norms(np.inf)
    assert res.value == pytest.approx(norms.sum(), rel=1e-12)
    top = ells[np.argmax(norms)]
    assert abs(2.0**top - pert.k) <= 2.0 ** (top + 1)


def test_spectral_and_pointwise_envelopes_agree():
    pert = PerturbationParams(34)
    a = modulated_beta(pert, RHO, method="spectral")
    b = modulated_beta(pert, RHO, method="pointwise")
    assert np.abs(a.envelope - b.envelope).max() < 1e-6 * np.abs(a.envelope).max()
    with pytest.raises(ValueError, match="unknown method"):
        modulated_beta(pert, RHO, method="nope")


@pytest.mark.parametrize("n", [34, 67])
def test_spectrum_oracle(n):
    assert spectrum_oracle_error(PerturbationParams(n), RHO) <= 1e-6


def test_spectrum_oracle_rejects_overlap():
    with pytest.raises(ValueError, match="overlap"):
        spectrum_oracle_error(PerturbationParams(5), RHO)
