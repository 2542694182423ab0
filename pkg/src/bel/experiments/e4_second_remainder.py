"""E4: the perturbation's derivatives weighted by the deformation at t0."""

from __future__ import annotations

import logging

import numpy as np

from ..initial_data import PerturbationParams, RhoSpec
from ..modulated import modulated_beta
from .report import ExperimentReport, Series, fit_slope
from .runs import lattice_interpolate, run_base, select_t0_xstar

log = logging.getLogger(__name__)


def deformation_on(state, cfg, X1, X2) -> tuple[np.ndarray, np.ndarray]:
    """d1 eta2 and d2 eta2 of a lattice-seeded flow state, interpolated to (X1, X2)."""
    F = state.defgrad
    args = (cfg.seed_extent, cfg.seed_count, X1, X2)
    return lattice_interpolate(F[:, 1, 0], *args), lattice_interpolate(F[:, 1, 1], *args)


def weighted_terms(mb, d12, d22, p: float) -> tuple[float, float]:
    """(||d2 beta d1 eta2||_p, ||d1 beta d2 eta2||_p)."""
    return mb.derivative(2).scaled(d12).lp(p), mb.derivative(1).scaled(d22).lp(p)


def run(cfg) -> ExperimentReport:
    rep = ExperimentReport("E4", "perturbation against the deformation at t0", cfg.echo())
    p = cfg.p
    rho = RhoSpec()
    traj = run_base(cfg, cfg.grid, cfg.tau)
    idx, t0, xs_auto, d22max = select_t0_xstar(traj)
    xs = tuple(cfg.xstar) if cfg.xstar is not None else tuple(xs_auto)
    state = traj.flow[idx]
    rows = []
    for n in cfg.n_list:
        pert = PerturbationParams(int(n), p, xs)
        mb = modulated_beta(pert, rho)
        X1, X2 = mb.grid.mesh()
        d12, d22 = deformation_on(state, cfg, X1, X2)
        i1, i2 = weighted_terms(mb, d12, d22, p)
        plain = mb.derivative(1).lp(p)
        rows.append([n, i1, i2, i2 / d22max, plain])
        log.info("E4 n=%d: I1=%.4e I2=%.4e", n, i1, i2)
    rep.add_series(Series("second_remainder", ["n", "I1", "I2", "I2_over_sup_d22", "d1beta_lp"], rows, "n",
                          ["I1", "I2"], True, "weighted perturbation derivatives against n"))
    data = np.asarray(rows, dtype=float)
    fit = fit_slope(data[:, 0], data[:, 1])
    rep.check_slope("C11", "second remainder item-1 slope", fit, -1.0, cfg.tol("e4_slope", 0.3))
    ratio = float(data[:, 3].max() / data[:, 3].min())
    rep.check("aux", "item-2 plateau", ratio <= 2.0 and data[:, 2].min() > 0, ratio,
              "max/min of I2 / sup|d2 eta2| <= 2")
    # identity flow: the weighted item-2 term is the plain L^p norm of d1 beta
    pert = PerturbationParams(int(cfg.n_list[0]), p, xs)
    mb = modulated_beta(pert, rho)
    one = np.ones(mb.envelope.shape)
    _, i2_id = weighted_terms(mb, 0 * one, one, p)
    rel = abs(i2_id - rows[0][4]) / rows[0][4]
    rep.check("aux", "identity flow", rel <= 1e-12, rel, "I2 = ||d1 beta||_p")
    rep.values.update({
        "t0": t0, "t0_index": idx, "t_end": float(traj.times[-1]), "xstar": list(xs),
        "sup_d22": d22max, "d12_at_xstar": float(deformation_on(state, cfg, xs[0], xs[1])[0]),
    })
    rep.notes.append(
        "t0 is the output time of the largest |d2 eta2|; in the default run this is the final time."
    )
    rep.notes.append("The item-1 slope also feeds criterion C11 through E7.")
    return rep
