"""Experiment configuration: defaults, flat ``key = value`` files and overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

__all__ = ["ExperimentConfig", "load_config", "parse_value"]


@dataclass
class ExperimentConfig:
    """Every tunable of E1-E8.

    Time horizons are given in eddy-turnover units: a horizon ``tau`` means
    t_end = tau / ||omega_0||_inf.
    """

    out: str = "bel-out"
    threads: int = 1
    p: float = 2.5
    N0: int = 2
    # E1
    M_list: tuple[float, ...] = (4.0, 8.0, 16.0)
    N_list: tuple[int, ...] = (2, 4, 8)
    quadrature_points: int = 96
    check_grid: int = 1024
    # dynamics (E2, E6-E8)
    M: float = 4.0
    N: int = 1
    half_width: float = float(np.pi / 4)
    grid: int = 512
    tau: float = 8.0
    cfl: float = 0.5
    steps_per_turnover: float = 6.0
    outputs_per_turnover: int = 2
    seed_extent: float = 0.35
    seed_count: int = 64
    axis_seed_count: int = 32
    doubling: bool = True
    # perturbations
    xstar: Optional[tuple[float, float]] = None
    n_list: tuple[int, ...] = (34, 67, 134)
    n_dyadic: tuple[int, ...] = (64, 128, 256)
    n_dynamic: tuple[int, ...] = (6, 8)
    n_comparison: int = 6
    scalings: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125)
    chain_grid: int = 1024
    comparison_grid: int = 1024
    tau_perturbed: float = 1.5
    lattice_count: int = 192
    lattice_extent: float = 0.7
    structure_grid: int = 1024
    # verdict tolerances
    tolerances: dict[str, float] = field(default_factory=dict)

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def echo(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def parse_value(template: Any, text: str, name: str = "") -> Any:
    """Convert ``text`` to the type of ``template`` (the field default)."""
    text = text.strip()
    if isinstance(template, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if isinstance(template, int):
        return int(text)
    if isinstance(template, float):
        return float(eval_number(text))
    if isinstance(template, tuple) or template is None:
        if text.lower() in ("", "none", "auto"):
            return None
        parts = [s for s in text.replace(";", ",").split(",") if s.strip()]
        kind = type(template[0]) if template else float
        return tuple(kind(eval_number(s)) if kind is float else kind(s.strip()) for s in parts)
    return text


def eval_number(text: str) -> float:
    """Float literal, optionally a multiple or fraction of ``pi`` (``pi/4``, ``2*pi``)."""
    t = text.strip().lower().replace(" ", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    num = num.replace("*", "").replace("pi", "")
    value = (float(num) if num else 1.0) * np.pi
    return value / float(den) if den else value


_OPTIONAL_TUPLES = {"xstar": (0.0, 0.0)}


def _coerce(cfg: ExperimentConfig, key: str, raw: str) -> None:
    key = key.strip().replace("-", "_")
    if key.startswith("tol."):
        cfg.tolerances[key[4:]] = float(raw)
        return
    names = {f.name for f in fields(cfg)}
    if key not in names:
        raise KeyError(f"unknown configuration key {key!r}")
    template = getattr(cfg, key)
    if template is None:
        template = _OPTIONAL_TUPLES.get(key)
    setattr(cfg, key, parse_value(template, raw, key))


def load_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[dict[str, str]] = None
) -> ExperimentConfig:
    """Defaults, then the file (``key = value`` lines, ``#`` comments), then overrides."""
    cfg = ExperimentConfig()
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            _coerce(cfg, k, v)
    for k, v in (overrides or {}).items():
        _coerce(cfg, k, str(v))
    return cfg
