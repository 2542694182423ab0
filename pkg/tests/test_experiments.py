import csv
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bel.cli import main
from bel.experiments import EXPERIMENTS
from bel.experiments.config import ExperimentConfig, eval_number, load_config
from bel.experiments.report import ExperimentReport, Series, emit, fit_slope
from bel.spectral import read_snapshot


@given(st.floats(-4, 4), st.floats(-3, 3))
def test_fit_slope_recovers_power_law(slope, logc):
    x = np.array([1.0, 2.0, 4.0, 8.0])
    fit = fit_slope(x, np.exp(logc) * x**slope)
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert fit.intercept == pytest.approx(logc, abs=1e-9)


def test_fit_slope_needs_two_points():
    with pytest.raises(ValueError):
        fit_slope([1.0], [1.0])
    assert fit_slope([1.0, 2.0], [1.0, 4.0]).slope == pytest.approx(2.0)


def test_inconclusive_fit_gives_no_verdict():
    rep = ExperimentReport("EX", "t", {})
    noisy = fit_slope([1, 2, 4, 8], [1.0, 3.0, 0.5, 2.0])
    assert not noisy.conclusive
    v = rep.check_slope("C1", "s", noisy, 0.0, 0.1)
    assert v.passed is None and v.status == "INCONCLUSIVE"
    assert not rep.passed


def test_emit_is_deterministic(tmp_path):
    rep = ExperimentReport("EX", "title", {"a": 1})
    rep.add_series(Series("curve", ["x", "y"], [[1.0, 2.0], [2.0, 8.0]], x="x", y=["y"], loglog=True))
    rep.values["arr"] = np.arange(3.0)
    rep.check("C1", "ok", True, 1.0, "= 1")
    a = [p.read_bytes() for p in emit(rep, tmp_path / "a")]
    b = [p.read_bytes() for p in emit(rep, tmp_path / "b")]
    assert a == b
    data = json.loads((tmp_path / "a" / "ex" / "report.json").read_text())
    assert data["verdicts"][0]["status"] == "PASS"
    assert data["values"]["arr"] == [0.0, 1.0, 2.0]
    assert (tmp_path / "a" / "ex" / "curve.svg").exists()


@pytest.mark.parametrize("text, want", [("pi/4", np.pi / 4), ("2*pi", 2 * np.pi), ("0.5", 0.5), ("pi", np.pi)])
def test_eval_number(text, want):
    assert eval_number(text) == pytest.approx(want)


def test_load_config_file_and_overrides(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nhalf_width = pi/4\nn_list = 10, 20\ngrid = 256\n")
    cfg = load_config(f, {"tol.e1_slope": "0.2", "xstar": "0.1,0.3", "grid": "128"})
    assert cfg.half_width == pytest.approx(np.pi / 4)
    assert cfg.n_list == (10, 20)
    assert cfg.grid == 128
    assert cfg.tol("e1_slope", 0.1) == 0.2
    assert cfg.xstar == (0.1, 0.3)
    assert isinstance(cfg, ExperimentConfig)


def test_load_config_rejects_unknown_key(tmp_path):
    with pytest.raises(KeyError, match="unknown configuration key"):
        load_config(None, {"nonsense": "1"})
    f = tmp_path / "bad.cfg"
    f.write_text("grid 12\n")
    with pytest.raises(ValueError, match="expected key = value"):
        load_config(f)


def test_registry_lists_all_experiments():
    assert sorted(EXPERIMENTS) == [f"e{i}" for i in range(1, 9)]


def test_cli_pipeline(tmp_path, capsys):
    snap = tmp_path / "w0.bel"
    assert main(["--grid", "512", "make-data", "--M", "2", "--N", "1", "--out", str(snap)]) == 0
    w = read_snapshot(snap)
    assert w.grid.n == 512

    assert main(["norms", "--in", str(snap), "--p", "2.5", "--dump-blocks", str(tmp_path / "b.csv")]) == 0
    out = capsys.readouterr().out
    assert "W^1,2.5" in out and "sup" in out
    with (tmp_path / "b.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"ell", "block_lp_norm", "weighted_term"}

    run = tmp_path / "run"
    assert main(["solve", "--in", str(snap), "--t-end", "0.5", "--dt", "0.05", "--outputs", "3",
                 "--symmetry", "odd-odd", "--out-dir", str(run)]) == 0
    assert (run / "times.csv").exists() and (run / "diagnostics.csv").exists()

    markers = tmp_path / "m.csv"
    assert main(["flow", "--traj", str(run), "--seeds", "lattice:0.3:4", "--t", "0.5",
                 "--out", str(markers)]) == 0
    with markers.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert all(abs(float(r["det"]) - 1) < 1e-6 for r in rows)


def test_cli_config_error_exit_code(capsys):
    assert main(["--set", "bogus=1", "experiment", "e1"]) == 2
