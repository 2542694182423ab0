"""Experiments E1-E8: measured checks of the construction, each producing a report."""

from __future__ import annotations

import logging
import time
from typing import Callable

from . import (
    e1_omega0,
    e2_deformation,
    e3_remainder,
    e4_second_remainder,
    e5_besov,
    e6_comparison,
    e7_chain,
    e8_structure,
)
from .config import ExperimentConfig, load_config
from .report import ExperimentReport, emit

__all__ = ["EXPERIMENTS", "ExperimentConfig", "ExperimentReport", "load_config", "emit", "run_experiment", "run_all"]

log = logging.getLogger(__name__)

EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "e1": e1_omega0.run,
    "e2": e2_deformation.run,
    "e3": e3_remainder.run,
    "e4": e4_second_remainder.run,
    "e5": e5_besov.run,
    "e6": e6_comparison.run,
    "e7": e7_chain.run,
    "e8": e8_structure.run,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentReport:
    key = name.lower()
    if key not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    started = time.perf_counter()
    log.info("running %s", key.upper())
    rep = EXPERIMENTS[key](cfg)
    rep.wall_time = time.perf_counter() - started
    return rep


def run_all(cfg: ExperimentConfig, names=None) -> list[ExperimentReport]:
    """Run experiments in order; shared solver runs are computed once."""
    return [run_experiment(k, cfg) for k in (names or EXPERIMENTS)]
