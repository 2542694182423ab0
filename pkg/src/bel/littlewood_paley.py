"""Dyadic frequency blocks and Besov-scale norms.

Shells are measured in angular wavenumber |kappa| (the ``exp(i<xi, x>)``
form of the block sum); block ell >= 0 lives in
``2**(ell-1) <= |kappa| <= 2**(ell+1)`` and block -1 in ``|kappa| <= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .spectral import GridSpec, ScalarField, lp_norm

__all__ = [
    "BumpProfile",
    "BesovParams",
    "BesovResult",
    "DyadicDecomposition",
    "UnresolvedShellError",
    "smooth_transition",
    "make_shell_multiplier",
    "shell_symbol",
    "max_resolved_shell",
    "project_block",
    "decompose",
    "besov_norm",
    "besov_b1_infty_1",
    "holder_zygmund",
]


class UnresolvedShellError(ValueError):
    pass


def smooth_transition(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=np.float64)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    s = 1.0 - t
    b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class BumpProfile:
    """Radial profile equal to 1 on r <= inner_radius and 0 on r >= outer_radius."""

    inner_radius: float = 0.5
    outer_radius: float = 1.0

    def __call__(self, r):
        t = (self.outer_radius - np.asarray(r, dtype=np.float64)) / (
            self.outer_radius - self.inner_radius
        )
        return smooth_transition(t)


DEFAULT_PROFILE = BumpProfile()


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("Besov exponents p, q must be >= 1")


def shell_symbol(ell: int, r, profile: BumpProfile = DEFAULT_PROFILE):
    """Value of the ell-th multiplier at radial frequency r."""
    r = np.asarray(r, dtype=np.float64)
    if ell < -1:
        raise ValueError("shell index must be >= -1")
    if ell == -1:
        return profile(r)
    return profile(r / 2.0 ** (ell + 1)) - profile(r / 2.0**ell)


def max_resolved_shell(grid: GridSpec) -> int:
    """Largest ell whose outer radius 2**(ell+1) does not exceed the grid Nyquist."""
    return int(np.floor(np.log2(grid.nyquist))) - 1


def make_shell_multiplier(
    ell: int, grid: GridSpec, profile: BumpProfile = DEFAULT_PROFILE
) -> np.ndarray:
    """Multiplier psi_ell sampled on the rfft2 layout of ``grid``."""
    if ell > max_resolved_shell(grid):
        raise UnresolvedShellError(
            f"unresolved shell: ell={ell} needs |kappa| up to {2.0 ** (ell + 1):g}, "
            f"grid Nyquist is {grid.nyquist:g}"
        )
    return shell_symbol(ell, grid.rfft_kappa_abs(), profile)


def project_block(f: ScalarField, ell: int, profile: BumpProfile = DEFAULT_PROFILE) -> ScalarField:
    """Frequency block Delta_ell f."""
    return ScalarField.from_spectral(
        f.grid, make_shell_multiplier(ell, f.grid, profile) * f.spectral
    )


@dataclass
class DyadicDecomposition:
    source: ScalarField
    blocks: list[tuple[int, ScalarField]]
    ell_max: int
    profile: BumpProfile = DEFAULT_PROFILE

    def tail(self) -> ScalarField:
        """source minus the sum of all resolved blocks."""
        total = np.sum([b.values for _, b in self.blocks], axis=0)
        return ScalarField(self.source.grid, self.source.values - total)


def decompose(
    f: ScalarField, ell_max: Optional[int] = None, profile: BumpProfile = DEFAULT_PROFILE
) -> DyadicDecomposition:
    top = max_resolved_shell(f.grid) if ell_max is None else ell_max
    blocks = [(ell, project_block(f, ell, profile)) for ell in range(-1, top + 1)]
    return DyadicDecomposition(f, blocks, top, profile)


@dataclass
class BesovResult:
    value: float
    params: BesovParams
    ells: np.ndarray
    block_norms: np.ndarray
    weighted_terms: np.ndarray
    tail: float

    @property
    def dominant_fraction(self) -> float:
        """Share of the largest weighted term in the (q = 1) sum of weighted terms."""
        total = self.weighted_terms.sum()
        return float(self.weighted_terms.max() / total) if total > 0 else 0.0

    def rows(self) -> list[tuple[int, float, float]]:
        return [
            (int(e), float(b), float(w))
            for e, b, w in zip(self.ells, self.block_norms, self.weighted_terms)
        ]


def combine_terms(weighted: np.ndarray, q: float) -> float:
    if q == np.inf:
        return float(weighted.max()) if weighted.size else 0.0
    return float(np.sum(weighted**q) ** (1.0 / q))


def besov_from_block_norms(
    ells: np.ndarray, block_norms: np.ndarray, params: BesovParams, tail: float = 0.0
) -> BesovResult:
    ells = np.asarray(ells)
    block_norms = np.asarray(block_norms, dtype=np.float64)
    weighted = 2.0 ** (params.s * ells) * block_norms
    if weighted.size and tail > weighted.max() and tail > 0:
        raise UnresolvedShellError(
            f"unresolved dominant shell: tail {tail:.3e} exceeds largest block {weighted.max():.3e}"
        )
    return BesovResult(combine_terms(weighted, params.q), params, ells, block_norms, weighted, tail)


def besov_norm(
    f: ScalarField,
    params: BesovParams,
    ell_max: Optional[int] = None,
    profile: BumpProfile = DEFAULT_PROFILE,
) -> BesovResult:
    """Finite-shell Besov norm of f.

    The sum runs over ell = -1..ell_max (default: every resolved shell).  The
    spectral content beyond the last shell is reported as ``tail``, its L^p
    norm weighted by ``2**(s*(ell_max+1))``; a tail that outweighs every block
    raises :class:`UnresolvedShellError`.
    """
    grid = f.grid
    top = max_resolved_shell(grid) if ell_max is None else ell_max
    if top > max_resolved_shell(grid):
        raise UnresolvedShellError(f"unresolved shell: ell_max={top} beyond grid Nyquist")
    kabs = grid.rfft_kappa_abs()
    spec = f.spectral
    ells = np.arange(-1, top + 1)
    norms = np.empty(ells.size)
    for i, ell in enumerate(ells):
        mult = shell_symbol(int(ell), kabs, profile)
        if not np.any(mult * np.abs(spec) > 0):
            norms[i] = 0.0
            continue
        norms[i] = lp_norm(ScalarField.from_spectral(grid, mult * spec), params.p)
    rest = 1.0 - profile(kabs / 2.0 ** (top + 1))
    tail_spec = rest * spec
    tail = 0.0
    if np.any(np.abs(tail_spec) > 0):
        tail = 2.0 ** (params.s * (top + 1)) * lp_norm(
            ScalarField.from_spectral(grid, tail_spec), params.p
        )
    return besov_from_block_norms(ells, norms, params, tail)


def besov_b1_infty_1(f: ScalarField, **kw) -> BesovResult:
    return besov_norm(f, BesovParams(1.0, np.inf, 1.0), **kw)


def holder_zygmund(f: ScalarField, s: float, **kw) -> BesovResult:
    return besov_norm(f, BesovParams(s, np.inf, np.inf), **kw)
