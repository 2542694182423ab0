"""Command-line interface: ``bel <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .spectral import GridSpec, read_snapshot, set_workers, write_snapshot

log = logging.getLogger("bel")


def _pair(text: str) -> tuple[float, float]:
    from .experiments.config import eval_number

    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated numbers")
    return eval_number(parts[0]), eval_number(parts[1])


def _number(text: str) -> float:
    from .experiments.config import eval_number

    return eval_number(text)


def _config(args):
    from .experiments.config import load_config

    overrides = dict(kv.split("=", 1) for kv in args.set or [])
    if args.out is not None:
        overrides["out"] = args.out
    if args.grid is not None:
        overrides["grid"] = str(args.grid)
    if args.threads is not None:
        overrides["threads"] = str(args.threads)
    if getattr(args, "xstar", None) is not None:
        overrides["xstar"] = ",".join(repr(v) for v in args.xstar)
    return load_config(args.config, overrides)


# -- subcommands -----------------------------------------------------------------


def cmd_make_data(args, cfg) -> int:
    from .initial_data import PerturbationParams, QuadrupoleParams, RhoSpec, beta, omega0

    grid = GridSpec(cfg.grid, args.half_width if args.half_width is not None else cfg.half_width)
    q = QuadrupoleParams(M=args.M if args.M is not None else cfg.M, N=args.N if args.N is not None else cfg.N,
                         N0=args.N0 if args.N0 is not None else cfg.N0, p=args.p if args.p is not None else cfg.p)
    w = omega0(q, grid)
    if args.n:
        xs = args.xstar if args.xstar is not None else (0.25, 0.2)
        w = w + beta(PerturbationParams(args.n, q.p, tuple(xs)), RhoSpec(), grid)
    out = Path(args.out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_snapshot(out, w)
    print(f"wrote {out} (grid {grid.n}, half-width {grid.half_width:.6g})")
    return 0


def cmd_solve(args, cfg) -> int:
    from .euler import ODD_ODD, SolverConfig, solve

    w0 = read_snapshot(args.inp)
    sym = {"none": (None, None), "odd-odd": ODD_ODD, "odd-x2": (None, -1)}[args.symmetry]
    sc = SolverConfig(dt=args.dt, t_end=args.t_end, cfl_cap=cfg.cfl, n_outputs=args.outputs,
                      symmetry_enforce=args.symmetry != "none", symmetry=sym if args.symmetry != "none" else ODD_ODD,
                      p=cfg.p)
    traj = solve(w0, sc)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "times.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "t", "file"])
        for i, (t, w) in enumerate(zip(traj.times, traj.snapshots)):
            name = f"omega_{i:04d}.bel"
            write_snapshot(out / name, w)
            wr.writerow([i, repr(float(t)), name])
    with (out / "diagnostics.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(traj.diagnostics.COLUMNS)
        for row in traj.diagnostics.rows():
            wr.writerow([repr(float(v)) for v in row])
    print(f"{traj.steps} steps, {traj.halvings} CFL halvings, {len(traj.times)} snapshots in {out}")
    return 0


def load_trajectory(directory) -> SimpleNamespace:
    """Snapshots and times written by ``bel solve``."""
    d = Path(directory)
    times, snaps = [], []
    with (d / "times.csv").open() as fh:
        for row in csv.DictReader(fh):
            times.append(float(row["t"]))
            snaps.append(read_snapshot(d / row["file"]))
    return SimpleNamespace(times=times, snapshots=snaps)


def parse_seeds(spec: str) -> np.ndarray:
    """``lattice:extent:count``, ``axes:extent:count`` or a CSV file with columns x, y."""
    from .lagrangian import axis_seeds, lattice_seeds

    kind, _, rest = spec.partition(":")
    if kind in ("lattice", "axes"):
        extent, count = rest.split(":")
        fn = lattice_seeds if kind == "lattice" else axis_seeds
        return fn(_number(extent), int(count))
    data = np.loadtxt(spec, delimiter=",", ndmin=2, skiprows=1)
    return data[:, :2]


def cmd_flow(args, cfg) -> int:
    from .lagrangian import FlowState, TrajectorySampler, advance_flow

    traj = load_trajectory(args.traj)
    state = FlowState.identity(parse_seeds(args.seeds))
    half_width = traj.snapshots[0].grid.half_width
    st = advance_flow(state, TrajectorySampler(traj), args.t, dt=args.dt, half_width=half_width)
    det = st.det()
    with open(args.out_file, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["seed_x", "seed_y", "pos_x", "pos_y", "d11", "d12", "d21", "d22", "det", "trusted"])
        for s, p, F, dt_, ok in zip(st.seeds, st.pos, st.defgrad, det, st.trusted):
            wr.writerow([repr(float(v)) for v in (*s, *p, F[0, 0], F[0, 1], F[1, 0], F[1, 1], dt_)] + [int(ok)])
    print(f"wrote {len(st)} markers at t = {args.t:g} to {args.out_file}")
    return 0


def cmd_norms(args, cfg) -> int:
    from .littlewood_paley import BesovParams, besov_norm
    from .spectral import lp_norm, sobolev_w1p_norm, sup_norm

    w = read_snapshot(args.inp)
    p = args.p if args.p is not None else cfg.p
    params = BesovParams(args.s, _number(args.bp), _number(args.bq))
    res = besov_norm(w, params)
    print(f"L^{p:g}      {lp_norm(w, p):.10g}")
    print(f"W^1,{p:g}    {sobolev_w1p_norm(w, p):.10g}")
    print(f"sup       {sup_norm(w):.10g}")
    print(f"B^{params.s:g}_{{{params.p:g},{params.q:g}}}  {res.value:.10g}  (tail {res.tail:.3g})")
    if args.dump_blocks:
        with open(args.dump_blocks, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["ell", "block_lp_norm", "weighted_term"])
            for ell, b, t in res.rows():
                wr.writerow([ell, repr(b), repr(t)])
    return 0


def _run_experiments(names, cfg) -> int:
    from .experiments import emit, run_experiment

    ok = True
    for name in names:
        rep = run_experiment(name, cfg)
        emit(rep, cfg.out)
        for line in rep.summary_lines():
            print(line)
        print(f"{rep.id}: wall time {rep.wall_time:.1f} s; report in {Path(cfg.out) / rep.id.lower()}")
        ok &= all(v.passed is True for v in rep.verdicts if v.criterion != "aux")
    return 0 if ok else 1


def cmd_experiment(args, cfg) -> int:
    return _run_experiments([args.name], cfg)


def cmd_all(args, cfg) -> int:
    from .experiments import EXPERIMENTS

    return _run_experiments(list(EXPERIMENTS), cfg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bel", description="Euler norm-inflation laboratory")
    ap.add_argument("--version", action="version", version=f"bel {__version__}")
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--out", help="output directory for experiment reports")
    ap.add_argument("--grid", type=int, help="grid size n (n x n)")
    ap.add_argument("--threads", type=int, help="FFT worker threads")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a configuration key")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-data", help="write omega0 (plus an optional perturbation) as a snapshot")
    p.add_argument("--M", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--N0", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int, help="add beta_n")
    p.add_argument("--xstar", type=_pair, help="perturbation centre a,b")
    p.add_argument("--half-width", type=_number, help="box half-width L (accepts pi/4)")
    p.add_argument("--out", dest="out_file", required=True, help="snapshot file")
    p.set_defaults(func=cmd_make_data)

    p = sub.add_parser("solve", help="integrate the vorticity equation from a snapshot")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--outputs", type=int, default=11, help="number of equally spaced snapshots")
    p.add_argument("--symmetry", choices=("none", "odd-odd", "odd-x2"), default="none")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("flow", help="advance markers through a stored trajectory")
    p.add_argument("--traj", required=True, help="directory written by bel solve")
    p.add_argument("--seeds", required=True, help="lattice:extent:count, axes:extent:count or a CSV file")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--out", dest="out_file", default="markers.csv")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("norms", help="Lebesgue, Sobolev and Besov norms of a snapshot")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--p", type=float, help="Lebesgue exponent for L^p and W^{1,p}")
    p.add_argument("--s", type=float, default=0.0, help="Besov smoothness")
    p.add_argument("--bp", default="inf", help="Besov integrability")
    p.add_argument("--bq", default="1", help="Besov summability")
    p.add_argument("--dump-blocks", help="CSV of per-shell norms")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("experiment", help="run one experiment")
    p.add_argument("name", choices=[f"e{i}" for i in range(1, 9)])
    p.add_argument("--xstar", type=_pair, help="perturbation centre a,b (default: measured)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("all", help="run E1-E8")
    p.add_argument("--xstar", type=_pair, help="perturbation centre a,b (default: measured)")
    p.set_defaults(func=cmd_all)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except (KeyError, ValueError) as exc:
        print(f"bel: configuration error: {exc}", file=sys.stderr)
        return 2
    set_workers(cfg.threads)
    try:
        return args.func(args, cfg)
    except (ValueError, FileNotFoundError) as exc:
        print(f"bel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
