"""E7: every term of the norm-inflation chain, measured on the grid."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from ..lagrangian import compare_flows
from ..spectral import ScalarField, derivative, gradient_lp_norm, lp_norm, sobolev_w1p_norm
from .report import ExperimentReport, Series
from .runs import lattice_interpolate, lattice_part, run_base, run_perturbed, select_t0_xstar

log = logging.getLogger(__name__)


def deformation_fields(state, extent: float, count: int, X1, X2) -> np.ndarray:
    """(2, 2, n, n) array of D eta entries interpolated from the lattice markers of ``state``."""
    F = state.defgrad[: count * count]
    out = np.empty((2, 2) + X1.shape)
    for a in range(2):
        for b in range(2):
            out[a, b] = lattice_interpolate(F[:, a, b], extent, count, X1, X2)
    return out


def _lp(a: np.ndarray, p: float, area: float) -> float:
    return float((np.sum(np.abs(a) ** p) * area) ** (1.0 / p))


def first_component(D: np.ndarray, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """d2 eta2 d1 g - d1 eta2 d2 g: the first component of grad(g o eta^-1) pulled back."""
    return D[1, 1] * g1 - D[1, 0] * g2


def second_component(D: np.ndarray, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    return -D[0, 1] * g1 + D[0, 0] * g2


@dataclass
class ChainTerms:
    """Measured terms for one n.

    Lagrangian quantities are integrals over seed coordinates, which equal the
    Eulerian ones because the flow preserves area.
    """

    n: int
    w1p_omega_n_t0: float  # ||omega_n(t0)||_{W1p}
    grad_omega_n_t0: float  # Eulerian ||grad omega_n(t0)||_p
    Q_n: float  # Lagrangian ||grad(omega_{0,n} o eta_n^-1)||_p
    P_n: float  # first component only
    P_eta: float  # same with eta in place of eta_n
    theta: float
    grad_omega0n: float  # ||grad omega_{0,n}||_p
    B_n: float  # ||d beta (perp-grad eta2)||_p
    W_n: float  # ||d omega0 (perp-grad eta2)||_p
    grad_omega_t0: float  # Eulerian ||grad omega(t0)||_p
    w1p_omega_t0: float
    M_third: float
    I1: float  # ||d2 beta d1 eta2||_p
    I2: float  # ||d1 beta d2 eta2||_p
    w1p_omega0n: float

    @property
    def inflation(self) -> float:
        return self.w1p_omega_n_t0 / self.w1p_omega0n

    def inequalities(self) -> list[tuple[str, float, float]]:
        """(name, larger side, smaller side); each must satisfy larger >= smaller."""
        return [
            ("W1p dominates pullback", self.w1p_omega_n_t0, self.P_n),
            ("flow perturbation", self.P_n, self.P_eta - self.theta * self.grad_omega0n),
            ("triangle split", self.P_eta, self.B_n - self.W_n),
            ("base pullback", self.grad_omega_t0, self.W_n),
            ("base W1p", self.w1p_omega_t0, self.grad_omega_t0),
            ("base growth cap", self.M_third, self.w1p_omega_t0),
            ("beta lower bound", self.B_n, self.I2 - self.I1),
        ]


def chain_terms(n, cfg, omega0, beta, omega_t0, omega_n_t0, D, Dn, theta) -> ChainTerms:
    p = cfg.p
    area = omega0.grid.cell_area
    f = omega0 + beta
    f1, f2 = derivative(f, 1).values, derivative(f, 2).values
    b1, b2 = derivative(beta, 1).values, derivative(beta, 2).values
    o1, o2 = derivative(omega0, 1).values, derivative(omega0, 2).values
    P_n = _lp(first_component(Dn, f1, f2), p, area)
    return ChainTerms(
        n=int(n),
        w1p_omega_n_t0=sobolev_w1p_norm(omega_n_t0, p),
        grad_omega_n_t0=gradient_lp_norm(omega_n_t0, p),
        Q_n=P_n + _lp(second_component(Dn, f1, f2), p, area),
        P_n=P_n,
        P_eta=_lp(first_component(D, f1, f2), p, area),
        theta=float(theta),
        grad_omega0n=gradient_lp_norm(f, p),
        B_n=_lp(first_component(D, b1, b2), p, area),
        W_n=_lp(first_component(D, o1, o2), p, area),
        grad_omega_t0=gradient_lp_norm(omega_t0, p),
        w1p_omega_t0=sobolev_w1p_norm(omega_t0, p),
        M_third=float(cfg.M ** (1.0 / 3.0)),
        I1=_lp(D[1, 0] * b2, p, area),
        I2=_lp(D[1, 1] * b1, p, area),
        w1p_omega0n=sobolev_w1p_norm(f, p),
    )


def spectral_tail(w: ScalarField, fraction: float = 0.9) -> float:
    """Share of the squared spectrum beyond ``fraction`` of the dealiasing band."""
    g = w.grid
    k1, k2 = g.rfft_kappa()
    kk = np.maximum(np.abs(k1), np.abs(k2))
    spec = np.abs(w.spectral) ** 2
    return float(spec[kk > fraction * (2.0 / 3.0) * g.nyquist].sum() / spec.sum())


def run(cfg) -> ExperimentReport:
    rep = ExperimentReport("E7", "norm-inflation chain", cfg.echo())
    grid_n, tau = cfg.chain_grid, cfg.tau_perturbed
    base = run_base(cfg, grid_n, tau, enforce=False, seeds="dense+axes")
    i0, t0, xs_auto, d22 = select_t0_xstar(base)
    xs = tuple(cfg.xstar) if cfg.xstar is not None else tuple(xs_auto)
    g = base.grid
    X1, X2 = g.mesh()
    E, c = cfg.lattice_extent, cfg.lattice_count
    D = deformation_fields(base.flow[i0], E, c, X1, X2)
    lattice = lattice_part(base, c)
    omega0 = base.snapshots[0]
    rows, terms = [], []
    for n in cfg.n_dynamic:
        tr, b = run_perturbed(cfg, int(n), xs, n_grid=grid_n, tau=tau)
        Dn = deformation_fields(tr.flow[i0], E, c, X1, X2)
        cmp = compare_flows(lattice.flow[: i0 + 1], tr.flow[: i0 + 1], 1.0, 1.0)
        ct = chain_terms(n, cfg, omega0, b, base.snapshots[i0], tr.snapshots[i0], D, Dn, cmp.theta)
        terms.append(ct)
        tail = spectral_tail(tr.snapshots[i0])
        rows.append([ct.n, ct.inflation, ct.w1p_omega_n_t0, ct.grad_omega_n_t0, ct.Q_n, ct.P_n, ct.P_eta,
                     ct.theta, ct.B_n, ct.W_n, ct.I2, ct.I1, ct.w1p_omega0n, tail])
        for name, big, small in ct.inequalities():
            rep.check("C11", f"{name} (n={ct.n})", big >= small, [big, small], "left >= right")
        rep.check("aux", f"Eulerian vs Lagrangian gradient (n={ct.n})",
                  abs(ct.grad_omega_n_t0 - ct.Q_n) <= 0.05 * ct.Q_n,
                  (ct.grad_omega_n_t0 - ct.Q_n) / ct.Q_n, "|rel| <= 0.05")
        rep.check("aux", f"resolved at t0 (n={ct.n})", tail <= 1e-2, tail, "spectral tail share <= 1e-2")
        log.info("E7 n=%d: inflation %.4f", ct.n, ct.inflation)
    cols = ["n", "inflation", "w1p_omega_n_t0", "grad_omega_n_t0", "Q_n", "P_n", "P_eta", "theta", "B_n",
            "W_n", "I2", "I1", "w1p_omega0n", "spectral_tail"]
    rep.add_series(Series("chain", cols, rows, "n", ["inflation"], False, "inflation factor against n"))
    infl = [t.inflation for t in terms]
    mono = bool(np.all(np.diff(infl) >= 0))
    rep.check("C11", "inflation nondecreasing", mono, infl, "nondecreasing in n")
    # same ratio with the gradient transported along markers, free of grid loss at t0
    lag = [t.Q_n / t.grad_omega0n for t in terms]
    rep.values["lagrangian_gradient_inflation"] = lag
    if not mono:
        loss = max(abs(t.grad_omega_n_t0 - t.Q_n) / t.Q_n for t in terms)
        drop = max(0.0, -float(np.min(np.diff(infl))) / max(infl))
        rep.notes.append(
            f"The inflation factor drops by {drop:.2%} between consecutive n while the grid gradient "
            f"differs from the marker-transported one by up to {loss:.2%}; the marker-based ratio "
            f"{[round(v, 4) for v in lag]} is {'nondecreasing' if np.all(np.diff(lag) >= 0) else 'not monotone'}."
        )

    # identity flow at t = 0: the first chain term is ||d1 omega_{0,n}||_p
    I = np.zeros((2, 2) + X1.shape)
    I[0, 0] = I[1, 1] = 1.0
    tr, b = run_perturbed(cfg, int(cfg.n_dynamic[0]), xs, n_grid=grid_n, tau=tau)
    ct0 = chain_terms(cfg.n_dynamic[0], cfg, omega0, b, omega0, tr.snapshots[0], I, I, 0.0)
    ref = lp_norm(derivative(omega0 + b, 1), cfg.p)
    rel = abs(ct0.P_n - ref) / ref
    rep.check("aux", "identity flow", rel <= 1e-12, rel, "P_n = ||d1 omega_{0,n}||_p at t = 0")
    rep.values.update({
        "t0": t0, "t0_index": i0, "t0_turnovers": t0 * float(base.diagnostics.linf[0]), "xstar": list(xs),
        "max_d22": d22, "grid": grid_n, "terms": [asdict(t) | {"inflation": t.inflation} for t in terms],
    })
    rep.notes.append(
        "t0 is the output time of the largest |d2 eta2| within the chain run's horizon, and xstar the "
        "seed where it occurs. Lagrangian terms integrate over seed coordinates with "
        "the deformation interpolated from the marker lattice; Eulerian terms use the grid."
    )
    return rep
