"""Pseudo-spectral 2D Euler in vorticity form with co-integrated Lagrangian markers.

The state is the raw ``rfft2`` array of the vorticity.  The advection term is
evaluated in divergence form d1(u1 w) + d2(u2 w) with 2/3-rule truncation and
advanced by classical RK4.  Markers, when supplied, are advanced inside the
same RK4 stages using the stage velocities, so the flow map sees exactly the
velocity the vorticity sees.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lagrangian import (
    FieldInterpolator,
    FlowState,
    _unpack,
    interpolator_grad_sup,
    velocity_spectra,
)
from .spectral import (
    GridSpec,
    ScalarField,
    VectorField,
    dealias_mask,
    inv_laplacian_symbol,
    irfft2,
    lp_norm,
    perp_gradient,
    inv_laplacian,
    rfft2,
    sobolev_w1p_norm,
    sup_norm,
)

__all__ = [
    "CFLError",
    "SolverConfig",
    "Trajectory",
    "Diagnostics",
    "ODD_ODD",
    "biot_savart",
    "rhs",
    "step",
    "solve",
    "symmetry_defect",
    "project_symmetry",
    "kato_ponce_reference",
]

log = logging.getLogger(__name__)

ODD_ODD = (-1, -1)


class CFLError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls.

    ``symmetry`` holds the parities (s1, s2) of the vorticity under
    x1 -> -x1 and x2 -> -x2; ``None`` in a slot means no constraint.  When
    ``symmetry_enforce`` is set the state is projected onto that parity class
    after every step.
    """

    dt: float
    t_end: float
    cfl_cap: float = 0.5
    dealias: bool = True
    symmetry_enforce: bool = False
    symmetry: tuple[Optional[int], Optional[int]] = ODD_ODD
    output_times: Optional[tuple[float, ...]] = None
    n_outputs: int = 11
    p: float = 2.5
    max_halvings: int = 10
    keep_snapshots: bool = True
    marker_margin: float = 0.1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if not 0 < self.cfl_cap <= 1:
            raise ValueError("cfl_cap must lie in (0, 1]")

    def times(self) -> np.ndarray:
        if self.t_end == 0:
            return np.array([0.0])
        if self.output_times is not None:
            ts = np.unique(np.concatenate([[0.0], np.asarray(self.output_times, float)]))
            if ts[-1] > self.t_end + 1e-12 or ts[0] < 0:
                raise ValueError("output times outside [0, t_end]")
            return ts if ts[-1] == self.t_end else np.append(ts, self.t_end)
        return np.linspace(0.0, self.t_end, max(2, self.n_outputs))


@dataclass
class Diagnostics:
    t: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    lp: list[float] = field(default_factory=list)
    linf: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    sym_defect: list[float] = field(default_factory=list)

    COLUMNS = ("t", "l2", "lp", "linf", "energy", "sym_defect")

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))


@dataclass
class Trajectory:
    grid: GridSpec
    config: SolverConfig
    times: list[float]
    snapshots: list[ScalarField]
    diagnostics: Diagnostics
    flow: list[FlowState] = field(default_factory=list)
    gronwall: list[float] = field(default_factory=list)
    steps: int = 0
    halvings: int = 0
    dt_used: float = 0.0
    wall_time: float = 0.0

    @property
    def final(self) -> ScalarField:
        return self.snapshots[-1]


def biot_savart(omega: ScalarField) -> VectorField:
    """u = perp-grad inv-Laplacian omega."""
    return perp_gradient(inv_laplacian(omega))


class _Operator:
    """Precomputed symbols for one grid."""

    def __init__(self, grid: GridSpec, dealias: bool):
        self.grid = grid
        self.k1, self.k2 = grid.rfft_kappa()
        n = grid.n
        nyq = np.ones((n, n // 2 + 1))
        nyq[n // 2, :] = 0.0
        nyq[:, n // 2] = 0.0
        self.mask = dealias_mask(n) if dealias else nyq
        self.invlap = inv_laplacian_symbol(grid) * self.mask

    def velocity(self, W):
        psi = self.invlap * W
        n = self.grid.n
        return irfft2(-1j * self.k2 * psi, n), irfft2(1j * self.k1 * psi, n)

    def rhs(self, W):
        n = self.grid.n
        u1, u2 = self.velocity(W)
        w = irfft2(W * self.mask, n)
        flux = 1j * self.k1 * rfft2(u1 * w) + 1j * self.k2 * rfft2(u2 * w)
        return -flux * self.mask, max(np.abs(u1).max(), np.abs(u2).max())


def rhs(omega: ScalarField, dealias: bool = True) -> ScalarField:
    """-u . grad omega, dealiased."""
    op = _Operator(omega.grid, dealias)
    R, _ = op.rhs(omega.spectral)
    return ScalarField.from_spectral(omega.grid, R)


def _reflect1(W):
    n = W.shape[0]
    return W[(n - np.arange(n)) % n, :]


def project_symmetry(W: np.ndarray, parity) -> np.ndarray:
    """Average a raw rfft2 array over the reflection group with the given parities."""
    s1, s2 = parity
    if s1 is None and s2 is None:
        return W
    if s2 is None:
        return 0.5 * (W + s1 * _reflect1(W))
    if s1 is None:
        return 0.5 * (W + s2 * np.conj(_reflect1(W)))
    return 0.25 * (W + s1 * _reflect1(W) + s2 * np.conj(_reflect1(W)) + s1 * s2 * np.conj(W))


def symmetry_defect(values: np.ndarray, parity=ODD_ODD) -> float:
    """max |w(x) - s w(Rx)| over the active reflections."""
    n = values.shape[0]
    r = (n - np.arange(n)) % n
    out = 0.0
    s1, s2 = parity
    if s1 is not None:
        out = max(out, float(np.abs(values - s1 * values[r, :]).max()))
    if s2 is not None:
        out = max(out, float(np.abs(values - s2 * values[:, r]).max()))
    return out


def _record(diag: Diagnostics, t: float, w: ScalarField, op: _Operator, cfg: SolverConfig):
    diag.t.append(t)
    diag.l2.append(lp_norm(w, 2))
    diag.lp.append(lp_norm(w, cfg.p))
    diag.linf.append(sup_norm(w))
    u1, u2 = op.velocity(w.spectral)
    diag.energy.append(0.5 * float(np.sum(u1**2 + u2**2)) * w.grid.cell_area)
    diag.sym_defect.append(symmetry_defect(w.values, cfg.symmetry))


def step(omega: ScalarField, dt: float, dealias: bool = True) -> ScalarField:
    """One RK4 step of size dt (no CFL control, no markers)."""
    op = _Operator(omega.grid, dealias)
    W = omega.spectral
    k1, _ = op.rhs(W)
    k2, _ = op.rhs(W + dt / 2 * k1)
    k3, _ = op.rhs(W + dt / 2 * k2)
    k4, _ = op.rhs(W + dt * k3)
    return ScalarField.from_spectral(omega.grid, W + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))


class _MarkerStage:
    def __init__(self, op: _Operator):
        self.op = op

    def build(self, W) -> FieldInterpolator:
        return FieldInterpolator(self.op.grid, velocity_spectra(W * self.op.mask, self.op.grid))

    def __call__(self, W, X, F, interp: Optional[FieldInterpolator] = None):
        interp = self.build(W) if interp is None else interp
        u, Du = _unpack(interp(X))
        return u, Du @ F, interp


def solve(
    omega0: ScalarField,
    config: SolverConfig,
    markers: Optional[FlowState] = None,
    reverse: bool = False,
) -> Trajectory:
    """Integrate the vorticity equation from omega0 over [0, t_end].

    With ``reverse=True`` the run goes backwards in time: the solver evolves
    -omega forward and negates the result, and markers follow the reversed
    velocity (giving the inverse flow).  Snapshots always hold omega itself.
    """
    grid = omega0.grid
    op = _Operator(grid, config.dealias)
    sign = -1.0 if reverse else 1.0
    W = sign * omega0.spectral.copy()
    if config.symmetry_enforce:
        W = project_symmetry(W, config.symmetry)
    outs = config.times()
    diag = Diagnostics()
    traj = Trajectory(grid, config, [], [], diag)
    stage = _MarkerStage(op) if markers is not None else None
    X = F = None
    if markers is not None:
        X, F = markers.pos.copy(), markers.defgrad.copy()
        trusted = markers.trusted.copy()

    def emit(t, W):
        w = ScalarField.from_spectral(grid, sign * W)
        traj.times.append(t)
        if config.keep_snapshots or t == outs[-1] or t == 0.0:
            traj.snapshots.append(w)
        _record(diag, t, w, op, config)
        if markers is not None:
            st = FlowState(t, markers.seeds, X.copy(), F.copy(), trusted.copy())
            st.mark_untrusted(grid.half_width, config.marker_margin)
            traj.flow.append(st)
            traj.gronwall.append(gint)

    started = _time.perf_counter()
    dt = config.dt
    t = 0.0
    gint = 0.0
    start_interp = None
    emit(0.0, W)
    h = grid.spacing
    for target in outs[1:]:
        while t < target - 1e-14:
            k1, umax = op.rhs(W)
            while dt > config.cfl_cap * h / max(umax, 1e-300):
                dt *= 0.5
                traj.halvings += 1
                log.info("CFL: dt halved to %.3e (max|u| = %.3e)", dt, umax)
                if traj.halvings > config.max_halvings:
                    raise CFLError(
                        f"CFL failure after {config.max_halvings} halvings: max|u|={umax:.3e}, "
                        f"spacing={h:.3e}, dt={dt:.3e}"
                    )
            hstep = min(dt, target - t)
            if stage is not None:
                a1, b1, interp = stage(W, X, F, start_interp)
                gsup = interpolator_grad_sup(interp)
            k2, _ = op.rhs(W + hstep / 2 * k1)
            if stage is not None:
                a2, b2, _ = stage(W + hstep / 2 * k1, X + hstep / 2 * a1, F + hstep / 2 * b1)
            k3, _ = op.rhs(W + hstep / 2 * k2)
            if stage is not None:
                a3, b3, _ = stage(W + hstep / 2 * k2, X + hstep / 2 * a2, F + hstep / 2 * b2)
            k4, _ = op.rhs(W + hstep * k3)
            if stage is not None:
                a4, b4, _ = stage(W + hstep * k3, X + hstep * a3, F + hstep * b3)
                X = X + hstep / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
                F = F + hstep / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
            W = W + hstep / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if config.symmetry_enforce:
                W = project_symmetry(W, config.symmetry)
            if stage is not None:
                # trapezoid on sup|Du|; the end value is the next step's start value
                start_interp = stage.build(W)
                gint += 0.5 * hstep * (gsup + interpolator_grad_sup(start_interp))
            t += hstep
            traj.steps += 1
            if not np.all(np.isfinite(W)):
                raise FloatingPointError(f"non-finite vorticity at t={t:.4g}")
        t = float(target)
        emit(t, W)
    traj.dt_used = dt
    traj.wall_time = _time.perf_counter() - started
    return traj


def kato_ponce_reference(trajectory: Trajectory, p: Optional[float] = None) -> float:
    """sup over stored snapshots of the W^{1,p} norm of the vorticity."""
    p = trajectory.config.p if p is None else p
    return max(sobolev_w1p_norm(w, p) for w in trajectory.snapshots)
