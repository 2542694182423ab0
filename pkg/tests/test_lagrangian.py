import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bel.euler import SolverConfig, solve
from bel.lagrangian import (
    AnalyticSampler,
    FieldInterpolator,
    FlowState,
    PullbackError,
    TrajectorySampler,
    advance_flow,
    axis_seeds,
    compare_flows,
    lattice_seeds,
    operator_norm_inf,
    pullback_gradient,
    sup_deformation,
)
from bel.spectral import GridSpec, ScalarField


class _Stored:
    def __init__(self, times, snapshots):
        self.times = times
        self.snapshots = snapshots


def shear_trajectory(n=256):
    # omega = sin x1 on [-pi, pi)^2 induces u = (0, -cos x1)
    g = GridSpec(n, np.pi)
    X1, _ = g.mesh()
    w = ScalarField(g, np.sin(X1))
    return _Stored([0.0, 0.5, 1.0], [w, w, w])


def test_seed_layouts():
    s = lattice_seeds(0.5, 4)
    assert s.shape == (16, 2) and np.abs(s).max() < 0.5
    a = axis_seeds(0.3, 5)
    assert a.shape == (20, 2)
    assert np.all(a[:10, 1] == 0) and np.all(a[10:, 0] == 0)
    assert not np.any(np.all(a == 0, axis=1))


def test_saddle_closed_form():
    seeds = lattice_seeds(0.5, 5)
    out = advance_flow(FlowState.identity(seeds), AnalyticSampler.saddle(), 1.0, dt=1e-2)
    e = np.e
    assert np.abs(out.pos - seeds * [1 / e, e]).max() < 1e-8
    F = np.broadcast_to(np.diag([1 / e, e]), out.defgrad.shape)
    assert np.abs(out.defgrad - F).max() < 1e-8


@pytest.mark.parametrize("sampler", ["analytic", "stored"])
def test_shear_closed_form(sampler):
    seeds = lattice_seeds(1.0, 6)
    s = AnalyticSampler.shear() if sampler == "analytic" else TrajectorySampler(shear_trajectory())
    out = advance_flow(FlowState.identity(seeds), s, 1.0, dt=1e-2)
    x1 = seeds[:, 0]
    assert np.abs(out.pos[:, 0] - x1).max() < 1e-8
    assert np.abs(out.pos[:, 1] - (seeds[:, 1] - np.cos(x1))).max() < 1e-8
    assert np.abs(out.defgrad[:, 1, 0] - np.sin(x1)).max() < 1e-8
    assert np.abs(out.det() - 1).max() < 1e-8


@pytest.mark.parametrize("M", [2.0, 4.0, 16.0])
def test_sup_deformation_at_log_time(M):
    seeds = lattice_seeds(0.5, 4)
    out = advance_flow(FlowState.identity(seeds), AnalyticSampler.saddle(), np.log(M), dt=1e-3)
    val, _, entry = sup_deformation(out)
    assert val == pytest.approx(M, rel=1e-10)
    assert entry == (2, 2)


@pytest.fixture(scope="module")
def euler_run():
    g = GridSpec(64, np.pi)
    X1, X2 = g.mesh()
    w = ScalarField(g, np.sin(X1) * np.sin(X2) + 0.4 * np.sin(2 * X1) * np.sin(X2))
    return solve(w, SolverConfig(dt=0.02, t_end=1.0, n_outputs=11))


def test_flow_composition(euler_run):
    seeds = lattice_seeds(1.0, 8)
    s = TrajectorySampler(euler_run)
    direct = advance_flow(FlowState.identity(seeds), s, 1.0, dt=5e-3)
    half = advance_flow(FlowState.identity(seeds), s, 0.5, dt=5e-3)
    rest = advance_flow(FlowState.identity(half.pos, 0.5), s, 1.0, dt=5e-3)
    assert np.abs(rest.pos - direct.pos).max() < 1e-7
    assert np.abs(rest.defgrad @ half.defgrad - direct.defgrad).max() < 1e-7


def test_reversibility(euler_run):
    seeds = lattice_seeds(1.0, 8)
    s = TrajectorySampler(euler_run)
    fwd = advance_flow(FlowState.identity(seeds), s, 1.0, dt=5e-3)
    back = advance_flow(fwd, s, 0.0, dt=5e-3)
    assert back.time == 0.0
    assert np.abs(back.pos - seeds).max() < 1e-5
    assert np.abs(back.defgrad - np.eye(2)).max() < 1e-5
    assert np.abs(fwd.det() - 1).max() < 1e-5


def test_pullback_linear_flow():
    A = np.array([[0.3, 0.8], [-0.2, -0.3]])
    seeds = lattice_seeds(0.4, 5)
    out = advance_flow(FlowState.identity(seeds), AnalyticSampler.linear(A), 1.0, dt=1e-3)
    x = seeds
    grad_f = np.column_stack([np.cos(x[:, 0]) * np.cos(2 * x[:, 1]), -2 * np.sin(x[:, 0]) * np.sin(2 * x[:, 1])])
    got = pullback_gradient(grad_f, out)
    Minv = np.linalg.inv(out.defgrad)
    want = np.einsum("nji,nj->ni", Minv, grad_f)
    assert np.abs(got - want).max() < 1e-12


def test_pullback_rejects_compressive_state():
    st_ = FlowState.identity(np.zeros((1, 2)))
    st_.defgrad[0] = np.diag([2.0, 2.0])
    with pytest.raises(PullbackError, match="deformation too strong"):
        pullback_gradient(np.ones((1, 2)), st_)


def test_compare_flows_constant_shift():
    v = np.array([1e-3, -2e-3])
    seeds = lattice_seeds(0.5, 4)
    base, pert = AnalyticSampler.saddle(), AnalyticSampler.saddle().shifted(v)
    times = [0.25, 0.5]
    a = [advance_flow(FlowState.identity(seeds), base, t, dt=1e-3) for t in times]
    b = [advance_flow(FlowState.identity(seeds), pert, t, dt=1e-3) for t in times]
    cmp_ = compare_flows(a, b, float(np.abs(v).max()), 0.0)
    # linear ODE: xi - eta = (v1 (1 - e^-t), v2 (e^t - 1))
    t = 0.5
    want = np.hypot(v[0] * (1 - np.exp(-t)), v[1] * (np.exp(t) - 1))
    assert cmp_.theta == pytest.approx(want, rel=1e-8)
    assert cmp_.defgrad_dev < 1e-12
    assert cmp_.ratio == pytest.approx(want / 2e-3, rel=1e-8)


def test_compare_flows_mismatched_seeds():
    a = [FlowState.identity(lattice_seeds(0.5, 4))]
    b = [FlowState.identity(lattice_seeds(0.5, 5))]
    with pytest.raises(ValueError, match="mismatched seeds"):
        compare_flows(a, b, 1.0, 1.0)
    with pytest.raises(ValueError, match="number of states"):
        compare_flows(a, a + a, 1.0, 1.0)


def test_untrusted_markers_are_excluded():
    s = FlowState.identity(np.array([[0.0, 0.0], [0.99, 0.0]]))
    s.defgrad[1] = 5.0 * np.eye(2)
    s.mark_untrusted(1.0)
    assert s.trusted.tolist() == [True, False]
    assert sup_deformation(s)[0] == 1.0


def test_interpolation_is_fourth_order(rng):
    pts = rng.uniform(-np.pi, np.pi, size=(200, 2))

    def f(x1, x2):
        return np.exp(np.sin(x1)) * np.cos(x2 + 0.3 * np.sin(x1))

    errs = []
    for n in (16, 32, 64):
        g = GridSpec(n, np.pi)
        X1, X2 = g.mesh()
        interp = FieldInterpolator.from_values(g, [f(X1, X2)])
        errs.append(np.abs(interp(pts)[:, 0] - f(pts[:, 0], pts[:, 1])).max())
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5)


def test_interpolator_reproduces_nodes():
    g = GridSpec(32, np.pi)
    X1, X2 = g.mesh()
    v = np.cos(X1) * np.sin(2 * X2)
    interp = FieldInterpolator.from_values(g, [v])
    assert np.abs(interp.grid_values(0) - v).max() < 1e-12


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_operator_norm_is_max_row_sum(entries):
    A = np.array(entries).reshape(1, 2, 2)
    assert operator_norm_inf(A)[0] == pytest.approx(np.abs(A[0]).sum(axis=1).max())
    assert operator_norm_inf(A)[0] >= np.linalg.norm(A[0], np.inf) - 1e-12
