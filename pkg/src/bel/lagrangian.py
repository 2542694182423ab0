"""Lagrangian markers: flow map, deformation gradient and pullback diagnostics.

Velocities on the grid are sampled at marker positions with periodic cubic
B-spline interpolation.  The B-spline prefilter is applied in Fourier space
(division by the sampled cubic B-spline symbol), so building an interpolant
for a spectrally defined field costs one inverse transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Protocol, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from .spectral import GridSpec, ScalarField, inv_laplacian_symbol, irfft2

__all__ = [
    "FlowState",
    "FieldInterpolator",
    "VelocitySampler",
    "AnalyticSampler",
    "TrajectorySampler",
    "PullbackError",
    "velocity_spectra",
    "velocity_interpolator",
    "advance_flow",
    "sup_deformation",
    "pullback_gradient",
    "compare_flows",
    "FlowComparison",
    "lattice_seeds",
    "axis_seeds",
    "operator_norm_inf",
]


class PullbackError(ValueError):
    pass


@dataclass
class FlowState:
    """Marker positions eta(t, x0) and deformation gradients D eta(t, x0)."""

    time: float
    seeds: np.ndarray
    pos: np.ndarray
    defgrad: np.ndarray
    trusted: Optional[np.ndarray] = None

    def __post_init__(self):
        self.seeds = np.asarray(self.seeds, dtype=np.float64).reshape(-1, 2)
        self.pos = np.asarray(self.pos, dtype=np.float64).reshape(-1, 2)
        self.defgrad = np.asarray(self.defgrad, dtype=np.float64).reshape(-1, 2, 2)
        if not (len(self.seeds) == len(self.pos) == len(self.defgrad)):
            raise ValueError("seeds, positions and deformation gradients differ in length")
        if self.trusted is None:
            self.trusted = np.ones(len(self.seeds), dtype=bool)

    @classmethod
    def identity(cls, seeds, time: float = 0.0) -> "FlowState":
        seeds = np.asarray(seeds, dtype=np.float64).reshape(-1, 2)
        F = np.broadcast_to(np.eye(2), (len(seeds), 2, 2)).copy()
        return cls(time, seeds, seeds.copy(), F)

    def __len__(self) -> int:
        return len(self.seeds)

    def det(self) -> np.ndarray:
        F = self.defgrad
        return F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]

    def copy(self) -> "FlowState":
        return FlowState(
            self.time, self.seeds.copy(), self.pos.copy(), self.defgrad.copy(), self.trusted.copy()
        )

    def mark_untrusted(self, half_width: float, margin: float = 0.1) -> None:
        """Flag markers that came within ``margin * L`` of the box edge."""
        inside = np.all(np.abs(self.pos) <= (1.0 - margin) * half_width, axis=1)
        self.trusted &= inside


def lattice_seeds(extent: float, count: int, centre=(0.0, 0.0)) -> np.ndarray:
    """count x count cell-centred lattice over the square centre +- extent."""
    t = (np.arange(count) + 0.5) / count * 2.0 * extent - extent
    X1, X2 = np.meshgrid(centre[0] + t, centre[1] + t, indexing="ij")
    return np.column_stack([X1.ravel(), X2.ravel()])


def axis_seeds(extent: float, count: int) -> np.ndarray:
    """Points on both coordinate axes (origin excluded)."""
    t = np.linspace(-extent, extent, 2 * count + 1)
    t = t[t != 0.0]
    z = np.zeros_like(t)
    return np.vstack([np.column_stack([t, z]), np.column_stack([z, t])])


# -- grid interpolation -------------------------------------------------------


def _bspline_symbol(grid: GridSpec) -> np.ndarray:
    n = grid.n
    th1 = 2.0 * np.pi * np.fft.fftfreq(n)
    th2 = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    b1 = (4.0 + 2.0 * np.cos(th1)) / 6.0
    b2 = (4.0 + 2.0 * np.cos(th2)) / 6.0
    return b1[:, None] * b2[None, :]


def _nyquist_free(grid: GridSpec) -> np.ndarray:
    n = grid.n
    mask = np.ones((n, n // 2 + 1))
    mask[n // 2, :] = 0.0
    mask[:, n // 2] = 0.0
    return mask


def velocity_spectra(omega_spec: np.ndarray, grid: GridSpec) -> list[np.ndarray]:
    """Raw rfft spectra of (u1, u2, d1u1, d2u1, d1u2) for u = perp-grad inv-Laplacian omega."""
    k1, k2 = grid.rfft_kappa()
    psi = inv_laplacian_symbol(grid) * omega_spec * _nyquist_free(grid)
    return [-1j * k2 * psi, 1j * k1 * psi, k1 * k2 * psi, k2 * k2 * psi, -k1 * k1 * psi]


class FieldInterpolator:
    """Periodic cubic B-spline interpolant of several fields sharing one grid."""

    def __init__(self, grid: GridSpec, spectra: Sequence[np.ndarray]):
        self.grid = grid
        sym = _bspline_symbol(grid)
        self.coeffs = [irfft2(s / sym, grid.n) for s in spectra]

    @classmethod
    def from_values(cls, grid: GridSpec, values: Sequence[np.ndarray]) -> "FieldInterpolator":
        from .spectral import rfft2

        return cls(grid, [rfft2(np.asarray(v, dtype=np.float64)) for v in values])

    def grid_values(self, index: int) -> np.ndarray:
        """Nodal values recovered from the spline coefficients (separable 1-4-1 filter)."""
        c = self.coeffs[index]
        c = (np.roll(c, 1, 0) + 4.0 * c + np.roll(c, -1, 0)) / 6.0
        return (np.roll(c, 1, 1) + 4.0 * c + np.roll(c, -1, 1)) / 6.0

    def __call__(self, pos: np.ndarray, which: Optional[Sequence[int]] = None) -> np.ndarray:
        g = self.grid
        idx = (np.asarray(pos, dtype=np.float64).T + g.half_width) / g.spacing
        which = range(len(self.coeffs)) if which is None else which
        return np.stack(
            [
                map_coordinates(self.coeffs[i], idx, order=3, mode="grid-wrap", prefilter=False)
                for i in which
            ],
            axis=-1,
        )


def velocity_interpolator(omega: ScalarField) -> FieldInterpolator:
    return FieldInterpolator(omega.grid, velocity_spectra(omega.spectral, omega.grid))


def operator_norm_inf(A: np.ndarray) -> np.ndarray:
    """Max absolute row sum of each 2x2 matrix in a stack."""
    return np.abs(A).sum(axis=-1).max(axis=-1)


def _unpack(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = vals[:, :2]
    Du = np.empty((len(vals), 2, 2))
    Du[:, 0, 0] = vals[:, 2]
    Du[:, 0, 1] = vals[:, 3]
    Du[:, 1, 0] = vals[:, 4]
    Du[:, 1, 1] = -vals[:, 2]
    return u, Du


def interpolator_grad_sup(interp: FieldInterpolator) -> float:
    """Grid maximum of the row-sum norm of Du (entries 2..4 of a velocity interpolant)."""
    d11 = np.abs(interp.grid_values(2))
    r1 = d11 + np.abs(interp.grid_values(3))
    r2 = np.abs(interp.grid_values(4)) + d11
    return float(max(r1.max(), r2.max()))


# -- samplers -----------------------------------------------------------------


class VelocitySampler(Protocol):
    def sample(self, t: float, pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def breakpoints(self, t0: float, t1: float) -> list[float]: ...

    def grad_sup(self, t: float) -> float: ...


@dataclass
class AnalyticSampler:
    """Closed-form stationary or time-dependent velocity field."""

    velocity: Callable[[float, np.ndarray], np.ndarray]
    gradient: Callable[[float, np.ndarray], np.ndarray]
    grad_bound: Optional[Callable[[float], float]] = None

    def sample(self, t, pos):
        return self.velocity(t, pos), self.gradient(t, pos)

    def breakpoints(self, t0, t1):
        return []

    def grad_sup(self, t):
        if self.grad_bound is None:
            raise ValueError("no gradient bound supplied")
        return self.grad_bound(t)

    @classmethod
    def linear(cls, A) -> "AnalyticSampler":
        A = np.asarray(A, dtype=np.float64)
        return cls(
            lambda t, x: x @ A.T,
            lambda t, x: np.broadcast_to(A, (len(x), 2, 2)).copy(),
            lambda t: float(operator_norm_inf(A[None])[0]),
        )

    @classmethod
    def saddle(cls) -> "AnalyticSampler":
        """u = (-x1, x2)."""
        return cls.linear([[-1.0, 0.0], [0.0, 1.0]])

    @classmethod
    def shear(cls) -> "AnalyticSampler":
        """u = (0, -cos x1)."""

        def vel(t, x):
            return np.column_stack([np.zeros(len(x)), -np.cos(x[:, 0])])

        def grad(t, x):
            G = np.zeros((len(x), 2, 2))
            G[:, 1, 0] = np.sin(x[:, 0])
            return G

        return cls(vel, grad, lambda t: 1.0)

    def shifted(self, v: np.ndarray) -> "AnalyticSampler":
        """Same field plus a constant vector v."""
        v = np.asarray(v, dtype=np.float64)
        return AnalyticSampler(
            lambda t, x: self.velocity(t, x) + v, self.gradient, self.grad_bound
        )


class TrajectorySampler:
    """Velocity of a stored trajectory, linear in time between snapshots."""

    def __init__(self, trajectory, sign: float = 1.0):
        if len(trajectory.snapshots) != len(trajectory.times):
            raise ValueError("trajectory does not hold its snapshots")
        self.times = np.asarray(trajectory.times, dtype=np.float64)
        self.snapshots = trajectory.snapshots
        self.sign = sign
        self._cache: dict[int, FieldInterpolator] = {}

    def _interp(self, i: int) -> FieldInterpolator:
        if i not in self._cache:
            if len(self._cache) > 8:
                self._cache.pop(next(iter(self._cache)))
            self._cache[i] = velocity_interpolator(self.snapshots[i])
        return self._cache[i]

    def _bracket(self, t: float) -> tuple[int, float]:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"time {t} outside the stored trajectory")
        i = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        w = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return i, float(np.clip(w, 0.0, 1.0))

    def sample(self, t, pos):
        if len(self.times) == 1:
            vals = self._interp(0)(pos)
        else:
            i, w = self._bracket(t)
            vals = (1.0 - w) * self._interp(i)(pos)
            if w > 0.0:
                vals = vals + w * self._interp(i + 1)(pos)
        u, Du = _unpack(self.sign * vals)
        return u, Du

    def breakpoints(self, t0, t1):
        lo, hi = min(t0, t1), max(t0, t1)
        return [float(t) for t in self.times if lo < t < hi]

    def grad_sup(self, t):
        i, w = self._bracket(t) if len(self.times) > 1 else (0, 0.0)
        a = interpolator_grad_sup(self._interp(i))
        if w > 0.0:
            return (1.0 - w) * a + w * interpolator_grad_sup(self._interp(i + 1))
        return a


# -- integration --------------------------------------------------------------


def _rk4_stage(sampler, t, X, F):
    u, Du = sampler.sample(t, X)
    return u, Du @ F


def advance_flow(
    state: FlowState,
    sampler: VelocitySampler,
    t_target: float,
    dt: float = 1e-2,
    half_width: Optional[float] = None,
) -> FlowState:
    """RK4 co-integration of d eta/dt = u(t, eta), d(D eta)/dt = Du(t, eta) D eta.

    Steps never straddle a sampler breakpoint (snapshot time), so the
    piecewise-linear time interpolation of stored velocities is integrated
    to full order.  Integration runs backwards when ``t_target < state.time``.
    """
    out = state.copy()
    if t_target == state.time:
        return out
    direction = 1.0 if t_target > state.time else -1.0
    stops = sampler.breakpoints(state.time, t_target) + [t_target]
    stops = sorted(set(stops), reverse=direction < 0)
    X, F, t = out.pos, out.defgrad, out.time
    for stop in stops:
        span = stop - t
        nsteps = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
        h = span / nsteps
        for _ in range(nsteps):
            k1x, k1f = _rk4_stage(sampler, t, X, F)
            k2x, k2f = _rk4_stage(sampler, t + h / 2, X + h / 2 * k1x, F + h / 2 * k1f)
            k3x, k3f = _rk4_stage(sampler, t + h / 2, X + h / 2 * k2x, F + h / 2 * k2f)
            k4x, k4f = _rk4_stage(sampler, t + h, X + h * k3x, F + h * k3f)
            X = X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            F = F + h / 6 * (k1f + 2 * k2f + 2 * k3f + k4f)
            t = t + h
        t = stop
    out.pos, out.defgrad, out.time = X, F, t
    if half_width is not None:
        out.mark_untrusted(half_width)
    return out


def gronwall_integral(sampler: VelocitySampler, t0: float, t1: float, samples: int = 64) -> float:
    """Trapezoid estimate of the integral of sup_x |Du(t, x)| (row-sum norm)."""
    ts = np.linspace(t0, t1, samples + 1)
    vals = np.array([sampler.grad_sup(t) for t in ts])
    return float(np.trapezoid(vals, ts))


def sup_deformation(state: FlowState) -> tuple[float, np.ndarray, tuple[int, int]]:
    """Largest |entry| of D eta over trusted markers, its seed point and (i, j) entry (1-based)."""
    mask = state.trusted
    if not np.any(mask):
        raise ValueError("empty marker set")
    F = np.abs(state.defgrad[mask])
    flat = F.reshape(len(F), 4)
    m, e = np.unravel_index(int(np.argmax(flat)), flat.shape)
    return float(flat[m, e]), state.seeds[mask][m].copy(), (e // 2 + 1, e % 2 + 1)


def pullback_gradient(
    grad_f: np.ndarray, state: FlowState, det_tol: float = 1e-2
) -> np.ndarray:
    """Gradient of f o eta^{-1} at the points eta(x), from grad f(x) and D eta(x).

    Uses the inverse Jacobian D eta^{-T} written through cofactors, i.e.
    first component  d2 eta2 d1 f - d1 eta2 d2 f  and second component
    -d2 eta1 d1 f + d1 eta1 d2 f  (the determinant is 1 for
    volume-preserving flows and is divided out).
    """
    F = state.defgrad
    det = state.det()
    if np.any(np.abs(det - 1.0) > det_tol):
        raise PullbackError("deformation too strong for pullback: det D eta drifted from 1")
    g = np.asarray(grad_f, dtype=np.float64).reshape(-1, 2)
    g1 = (F[:, 1, 1] * g[:, 0] - F[:, 1, 0] * g[:, 1]) / det
    g2 = (-F[:, 0, 1] * g[:, 0] + F[:, 0, 0] * g[:, 1]) / det
    return np.column_stack([g1, g2])


@dataclass
class FlowComparison:
    theta: float
    bound: float
    ratio: float
    position_dev: float
    defgrad_dev: float


def compare_flows(
    states_u: Sequence[FlowState],
    states_uv: Sequence[FlowState],
    v_sup: float,
    v_grad_sup: float,
) -> FlowComparison:
    """theta = sup over markers and times of |eta - xi| + |D eta - D xi|, and its ratio
    to sup ||v|| + sup ||Dv||."""
    if len(states_u) != len(states_uv):
        raise ValueError("mismatched number of states")
    theta = pos_dev = def_dev = 0.0
    for a, b in zip(states_u, states_uv):
        if a.seeds.shape != b.seeds.shape or not np.array_equal(a.seeds, b.seeds):
            raise ValueError("mismatched seeds")
        mask = a.trusted & b.trusted
        dp = np.linalg.norm(a.pos[mask] - b.pos[mask], axis=1)
        dF = np.abs(a.defgrad[mask] - b.defgrad[mask]).max(axis=(1, 2))
        if dp.size:
            theta = max(theta, float((dp + dF).max()))
            pos_dev = max(pos_dev, float(dp.max()))
            def_dev = max(def_dev, float(dF.max()))
    bound = v_sup + v_grad_sup
    ratio = theta / bound if bound > 0 else 0.0
    return FlowComparison(theta, bound, ratio, pos_dev, def_dev)
