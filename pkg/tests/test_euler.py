import numpy as np
import pytest

from bel.euler import (
    ODD_ODD,
    CFLError,
    SolverConfig,
    biot_savart,
    kato_ponce_reference,
    project_symmetry,
    rhs,
    solve,
    step,
    symmetry_defect,
)
from bel.spectral import GridSpec, ScalarField, rfft2, sup_norm


def vortex_pair(n=64):
    g = GridSpec(n, np.pi)
    X1, X2 = g.mesh()
    w = np.exp(-4 * ((X1 - 0.6) ** 2 + X2**2)) - np.exp(-4 * ((X1 + 0.6) ** 2 + X2**2))
    w = w + 0.5 * np.exp(-6 * (X1**2 + (X2 - 1.0) ** 2))
    return ScalarField(g, w)


def odd_odd_field(n=64):
    g = GridSpec(n, np.pi)
    X1, X2 = g.mesh()
    return ScalarField(g, np.sin(X1) * np.sin(X2) + 0.3 * np.sin(2 * X1) * np.sin(X2))


@pytest.mark.parametrize("modes", [((1, 0), (0, 1)), ((3, 4), (5, 0))])
def test_laplacian_eigenfunction_sum_is_steady(modes):
    g = GridSpec(64, np.pi)
    X1, X2 = g.mesh()
    (a, b), (c, d) = modes
    w = ScalarField(g, np.cos(a * X1 + b * X2) + 0.7 * np.sin(c * X1 + d * X2))
    assert np.abs(rhs(w).values).max() < 1e-12 * sup_norm(w)


@pytest.mark.parametrize("mode", [(1, 0), (0, 2), (3, 0)])
def test_single_fourier_mode_is_steady(mode):
    g = GridSpec(32, np.pi)
    X1, X2 = g.mesh()
    w = ScalarField(g, np.sin(mode[0] * X1 + mode[1] * X2))
    out = step(w, 0.1)
    assert np.abs(out.values - w.values).max() < 1e-13


def test_biot_savart_of_sine_mode():
    g = GridSpec(32, np.pi)
    X1, X2 = g.mesh()
    u = biot_savart(ScalarField(g, np.sin(2 * X1)))
    # psi = -sin(2 x1)/4, u = (-d2 psi, d1 psi)
    assert np.allclose(u.u1.values, 0, atol=1e-15)
    assert np.allclose(u.u2.values, -0.5 * np.cos(2 * X1), atol=1e-14)


def test_invariants_short_run():
    w = vortex_pair()
    tr = solve(w, SolverConfig(dt=0.02, t_end=1.0, n_outputs=5, dealias=True))
    l2 = np.asarray(tr.diagnostics.l2)
    e = np.asarray(tr.diagnostics.energy)
    assert np.abs(l2 / l2[0] - 1).max() < 1e-6
    assert np.abs(e / e[0] - 1).max() < 1e-6
    assert tr.final.mean() == pytest.approx(w.mean(), abs=1e-14)
    assert len(tr.snapshots) == 5 and tr.times[-1] == pytest.approx(1.0)


def test_rk4_time_convergence():
    w = vortex_pair(32)
    ref = solve(w, SolverConfig(dt=0.0125, t_end=0.5, n_outputs=2)).final
    errs = []
    for dt in (0.1, 0.05):
        out = solve(w, SolverConfig(dt=dt, t_end=0.5, n_outputs=2)).final
        errs.append(np.abs(out.values - ref.values).max())
    assert errs[0] / errs[1] > 12  # fourth order gives 16


def test_symmetry_projection():
    w = odd_odd_field()
    W = w.spectral
    assert np.abs(project_symmetry(W, ODD_ODD) - W).max() < 1e-12
    rng = np.random.default_rng(0)
    noise = rfft2(rng.standard_normal(w.values.shape))
    P = project_symmetry(noise, ODD_ODD)
    assert np.abs(project_symmetry(P, ODD_ODD) - P).max() < 1e-12
    vals = ScalarField.from_spectral(w.grid, P).values
    assert symmetry_defect(vals, ODD_ODD) < 1e-12


def test_odd_odd_symmetry_is_preserved_without_projection():
    w = odd_odd_field()
    tr = solve(w, SolverConfig(dt=0.05, t_end=1.0, n_outputs=3))
    assert max(tr.diagnostics.sym_defect) < 1e-12


def test_reverse_run_recovers_initial_vorticity():
    w = vortex_pair()
    cfg = SolverConfig(dt=0.02, t_end=0.6, n_outputs=2)
    fwd = solve(w, cfg)
    back = solve(fwd.final, cfg, reverse=True)
    assert np.abs(back.final.values - w.values).max() < 1e-6 * sup_norm(w)


def test_cfl_failure_is_reported():
    w = vortex_pair() * 1e4
    with pytest.raises(CFLError, match="CFL failure"):
        solve(w, SolverConfig(dt=1.0, t_end=1.0, max_halvings=2))


@pytest.mark.parametrize("kw", [{"dt": 0.0, "t_end": 1.0}, {"dt": 0.1, "t_end": -1.0}, {"dt": 0.1, "t_end": 1.0, "cfl_cap": 2.0}])
def test_invalid_solver_config(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_output_times_and_kato_ponce_reference():
    w = vortex_pair(32)
    cfg = SolverConfig(dt=0.05, t_end=0.5, output_times=(0.1, 0.25))
    tr = solve(w, cfg)
    assert tr.times == pytest.approx([0.0, 0.1, 0.25, 0.5])
    assert kato_ponce_reference(tr) >= kato_ponce_reference(tr, p=2.5) * 0.0
    assert np.all(np.isfinite(tr.diagnostics.rows()))
