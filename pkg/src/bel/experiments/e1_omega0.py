"""E1: W^{1,p} size of the quadrupole data across M and N."""

from __future__ import annotations

import numpy as np

from ..initial_data import QuadrupoleParams, omega0, omega0_w1p_quadrature
from ..spectral import GridSpec, sobolev_w1p_norm
from .report import ExperimentReport, Series, fit_slope


def run(cfg) -> ExperimentReport:
    rep = ExperimentReport("E1", "quadrupole data: M^-2 scaling and N-uniformity", cfg.echo())
    p = cfg.p
    N_ref = cfg.N_list[0]
    M_ref = cfg.M_list[0]

    rows = []
    for M in cfg.M_list:
        q = QuadrupoleParams(M=M, N=N_ref, N0=cfg.N0, p=p)
        r = omega0_w1p_quadrature(q, cfg.quadrature_points)
        rows.append([M, r["w1p"], r["w1p"] * M**2])
    rep.add_series(Series("w1p_vs_M", ["M", "w1p", "w1p_times_M2"], rows, "M", ["w1p"], True,
                          f"W1p norm vs M (N={N_ref})"))
    fit = fit_slope([r[0] for r in rows], [r[1] for r in rows])
    rep.check_slope("C3", "M-slope", fit, -2.0, cfg.tol("e1_slope", 0.1))

    rows = []
    for N in cfg.N_list:
        q = QuadrupoleParams(M=M_ref, N=N, N0=cfg.N0, p=p)
        r = omega0_w1p_quadrature(q, cfg.quadrature_points)
        rows.append([N, r["w1p"], r["lp"], r["d1"], r["d2"], ((N + 1) / N) ** (1 / p)])
    rep.add_series(Series("w1p_vs_N", ["N", "w1p", "lp", "d1", "d2", "terms_factor"], rows, "N",
                          ["w1p"], False, f"W1p norm vs N (M={M_ref:g})"))
    vals = np.array([r[1] for r in rows])
    spread = float((vals.max() - vals.min()) / vals.min())
    rep.check("C3", "N-spread", spread <= cfg.tol("e1_spread", 0.10), spread, "<= 0.10",
              "relative spread (max - min) / min over the N list")
    doubling = [abs(vals[i + 1] / vals[i] - 1.0) for i in range(len(vals) - 1)]
    rep.values["per_step_change"] = doubling
    rep.values["terms_factor"] = [r[5] for r in rows]
    rep.notes.append(
        "The sum runs over N+1 dyadic copies with prefactor N^(-1/p); disjoint supports give "
        "||omega0||_{W1p}^p proportional to (N+1)/N, so the N-dependence is ((N+1)/N)^(1/p)."
    )

    # grid cross-check of the patch quadrature at the smallest N
    grid = GridSpec(cfg.check_grid, cfg.half_width)
    q = QuadrupoleParams(M=M_ref, N=N_ref, N0=cfg.N0, p=p)
    try:
        w = omega0(q, grid)
        g = sobolev_w1p_norm(w, p)
        quad = omega0_w1p_quadrature(q, cfg.quadrature_points)["w1p"]
        rel = abs(g - quad) / quad
        rep.values["grid_vs_quadrature"] = {"grid": g, "quadrature": quad, "rel": rel}
        rep.check("aux", "grid cross-check", rel <= 1e-3, rel, "<= 1e-3")
    except ValueError as exc:
        rep.notes.append(f"grid cross-check skipped: {exc}")
    return rep
