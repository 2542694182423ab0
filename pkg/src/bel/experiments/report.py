"""Experiment reports, slope fits and file emission (JSON, CSV, SVG)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from .. import __version__

__all__ = ["SCHEMA_VERSION", "SlopeFit", "Verdict", "Series", "ExperimentReport", "fit_slope", "emit"]

SCHEMA_VERSION = 1


@dataclass
class SlopeFit:
    """Least-squares line through (log x, log y)."""

    slope: float
    intercept: float
    r_squared: float
    stderr: float
    residuals: list[float]

    @property
    def conclusive(self) -> bool:
        return self.r_squared >= 0.9


def fit_slope(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    if lx.size < 2:
        raise ValueError("need at least two points for a slope")
    if lx.size == 2:
        slope = float((ly[1] - ly[0]) / (lx[1] - lx[0]))
        return SlopeFit(slope, float(ly[0] - slope * lx[0]), 1.0, 0.0, [0.0, 0.0])
    res = stats.linregress(lx, ly)
    resid = ly - (res.intercept + res.slope * lx)
    r2 = float(res.rvalue**2) if np.isfinite(res.rvalue) else 0.0
    return SlopeFit(float(res.slope), float(res.intercept), r2, float(res.stderr), resid.tolist())


@dataclass
class Verdict:
    """Outcome of one checked statement.

    ``passed`` is None when the underlying fit is inconclusive (R^2 < 0.9).
    """

    criterion: str
    name: str
    passed: Optional[bool]
    measured: Any
    threshold: str
    note: str = ""

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "INCONCLUSIVE"}[self.passed]


@dataclass
class Series:
    """A named table plus optional plotting hints."""

    name: str
    columns: list[str]
    rows: list[list[float]]
    x: Optional[str] = None
    y: list[str] = field(default_factory=list)
    loglog: bool = False
    title: str = ""


@dataclass
class ExperimentReport:
    id: str
    title: str
    config: dict[str, Any]
    series: list[Series] = field(default_factory=list)
    slopes: dict[str, SlopeFit] = field(default_factory=dict)
    values: dict[str, Any] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def check(
        self, criterion: str, name: str, ok: Optional[bool], measured, threshold: str, note: str = ""
    ) -> Verdict:
        v = Verdict(criterion, name, None if ok is None else bool(ok), measured, threshold, note)
        self.verdicts.append(v)
        return v

    def check_slope(
        self, criterion: str, name: str, fit: SlopeFit, target: float, tol: float
    ) -> Verdict:
        self.slopes[name] = fit
        ok = abs(fit.slope - target) <= tol if fit.conclusive else None
        return self.check(
            criterion, name, ok, round(fit.slope, 6), f"{target:+.3f} +- {tol}",
            f"R^2 = {fit.r_squared:.4f}",
        )

    def add_series(self, s: Series) -> None:
        self.series.append(s)

    @property
    def passed(self) -> bool:
        return all(v.passed is True for v in self.verdicts)

    def verdicts_for(self, criterion: str) -> list[Verdict]:
        return [v for v in self.verdicts if v.criterion == criterion]

    def summary_lines(self) -> list[str]:
        return [
            f"[{v.status:>12}] {self.id} {v.criterion} {v.name}: {_fmt(v.measured)} ({v.threshold})"
            + (f"  {v.note}" if v.note else "")
            for v in self.verdicts
        ]

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "title": self.title,
            "provenance": {"package": "bel", "version": __version__, "wall_time_s": self.wall_time},
            "config": self.config,
            "values": _jsonable(self.values),
            "slopes": {k: asdict(v) for k, v in self.slopes.items()},
            "verdicts": [
                {**asdict(v), "measured": _jsonable(v.measured), "status": v.status}
                for v in self.verdicts
            ],
            "notes": self.notes,
            "series": [s.name for s in self.series],
        }


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _plot(series: Series, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "bel"
    data = np.asarray(series.rows, dtype=np.float64)
    xi = series.columns.index(series.x)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for name in series.y:
        yi = series.columns.index(name)
        x, y = data[:, xi], data[:, yi]
        if series.loglog:
            keep = (x > 0) & (y > 0)
            ax.loglog(x[keep], y[keep], "o-", label=name)
        else:
            ax.plot(x, y, "o-", ms=3, label=name)
    ax.set_xlabel(series.x)
    ax.set_title(series.title or series.name)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit(report: ExperimentReport, out_dir, formats: Sequence[str] = ("json", "csv", "svg")) -> list[Path]:
    """Write report.json, one CSV per series and SVG plots for series with plot hints."""
    out = Path(out_dir) / report.id.lower()
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        p = out / "report.json"
        p.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        written.append(p)
    for s in report.series:
        if "csv" in formats:
            p = out / f"{s.name}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(s.columns)
                for row in s.rows:
                    w.writerow([_cell(v) for v in row])
            written.append(p)
        if "svg" in formats and s.x and s.y:
            p = out / f"{s.name}.svg"
            _plot(s, p)
            written.append(p)
    return written


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v
