"""Periodic-box spectral substrate.

The plane is modelled by the periodic box [-L, L)^2 sampled on a uniform
n x n grid.  Array axis 0 runs along x1 and axis 1 along x2, so
``values[i, j] = f(-L + i*h, -L + j*h)``.  The origin sits at index n/2 and the
reflection x -> -x is the index map i -> (n - i) % n.

Fourier convention: box coefficients are

    c_m = (2L)^-2 * integral_box f(x) exp(-2 pi i <m / 2L, x>) dx,

so a function band-limited below the grid Nyquist satisfies
``c_m = fhat(m / 2L) / (2L)^2`` with ``fhat(xi) = integral f exp(-2 pi i <xi, x>)``.
The angular wavenumber of box mode m is ``kappa = pi * m / L``.

Internally every operator works on raw ``rfft2`` arrays (no normalisation,
no phase shift); :func:`transform_forward` exposes the normalised, phase
corrected full coefficient array.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "set_workers",
    "transform_forward",
    "transform_inverse",
    "derivative",
    "laplacian",
    "inv_laplacian",
    "perp_gradient",
    "divergence",
    "rot",
    "lp_norm",
    "evaluate_at",
    "sup_norm",
    "sobolev_w1p_norm",
    "gradient_lp_norm",
    "dealias",
    "dealias_mask",
    "write_snapshot",
    "read_snapshot",
]

_WORKERS = 1


def set_workers(k: int) -> None:
    """Number of threads handed to the FFT backend (results are deterministic per k)."""
    global _WORKERS
    _WORKERS = max(1, int(k))


def rfft2(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a, workers=_WORKERS)


def irfft2(a: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfft2(a, s=(n, n), workers=_WORKERS)


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the periodic box [-L, L)^2."""

    points_per_axis: int
    half_width: float = float(np.pi)

    def __post_init__(self):
        n = self.points_per_axis
        if n < 16 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 16, got {n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def nyquist(self) -> float:
        """Largest angular wavenumber per axis resolved by the grid."""
        return np.pi * (self.n // 2) / self.half_width

    @property
    def kappa_unit(self) -> float:
        """Angular wavenumber of box mode m = 1."""
        return np.pi / self.half_width

    def coords(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def mode_indices(self) -> np.ndarray:
        """Integer box modes along an axis in FFT order."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)

    def rfft_kappa(self) -> tuple[np.ndarray, np.ndarray]:
        """Angular wavenumbers broadcastable against an rfft2 array."""
        m1 = self.mode_indices()
        m2 = np.arange(self.n // 2 + 1)
        return (self.kappa_unit * m1)[:, None], (self.kappa_unit * m2)[None, :]

    def rfft_kappa_abs(self) -> np.ndarray:
        k1, k2 = self.rfft_kappa()
        return np.sqrt(k1**2 + k2**2)

    def reflect_index(self) -> np.ndarray:
        return (-np.arange(self.n)) % self.n


class ScalarField:
    """Samples of a real function on a :class:`GridSpec`.

    Values are copied, frozen and validated on construction.  The raw rfft2
    of the values is cached on first use.
    """

    __slots__ = ("grid", "values", "_spec")

    def __init__(self, grid: GridSpec, values, spectral_cache: Optional[np.ndarray] = None):
        values = np.array(values, dtype=np.float64)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"values shape {values.shape} does not match grid {grid.n}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self._spec = spectral_cache

    @classmethod
    def from_spectral(cls, grid: GridSpec, spec: np.ndarray) -> "ScalarField":
        return cls(grid, irfft2(spec, grid.n), spectral_cache=spec)

    @property
    def spectral(self) -> np.ndarray:
        if self._spec is None:
            self._spec = rfft2(self.values)
        return self._spec

    def mean(self) -> float:
        return float(self.values.mean())

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.values)

    def reflected(self, axis: int) -> "ScalarField":
        """The field composed with the reflection x_axis -> -x_axis."""
        idx = self.grid.reflect_index()
        v = self.values[idx, :] if axis == 1 else self.values[:, idx]
        return ScalarField(self.grid, v)

    def __repr__(self) -> str:
        return f"ScalarField(n={self.grid.n}, L={self.grid.half_width:g})"


@dataclass(frozen=True)
class VectorField:
    u1: ScalarField
    u2: ScalarField

    def __post_init__(self):
        _same_grid(self.u1, self.u2)

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    def components(self) -> tuple[ScalarField, ScalarField]:
        return self.u1, self.u2

    def sup_norm(self) -> float:
        """max over components of the sup norm."""
        return max(lp_norm(self.u1, np.inf), lp_norm(self.u2, np.inf))

    def gradient_sup_norm(self) -> float:
        """max over the four Jacobian entries of the sup norm."""
        return max(
            lp_norm(derivative(c, a), np.inf) for c in self.components() for a in (1, 2)
        )


def _same_grid(a: ScalarField, b: ScalarField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def _phase(grid: GridSpec) -> np.ndarray:
    m = grid.mode_indices()
    s = np.where(m % 2 == 0, 1.0, -1.0)
    return s[:, None] * s[None, :]


def transform_forward(f: ScalarField) -> np.ndarray:
    """Normalised box Fourier coefficients c_m, full n x n array in FFT order.

    Index ``[i, j]`` holds the mode ``(m1, m2) = (mode_indices()[i], mode_indices()[j])``.
    The zero mode equals the mean of f.
    """
    n = f.grid.n
    full = sfft.fft2(f.values, workers=_WORKERS)
    return full * _phase(f.grid) / n**2


def transform_inverse(coeffs: np.ndarray, grid: GridSpec) -> ScalarField:
    """Inverse of :func:`transform_forward`; the imaginary residue is discarded."""
    n = grid.n
    raw = np.asarray(coeffs) * _phase(grid) * n**2
    return ScalarField(grid, sfft.ifft2(raw, workers=_WORKERS).real)


def _nyquist_zero(grid: GridSpec, axis: int) -> np.ndarray:
    """Mask removing the unpaired Nyquist mode along ``axis`` (keeps odd derivatives real)."""
    n = grid.n
    mask = np.ones((n, n // 2 + 1))
    if axis == 1:
        mask[n // 2, :] = 0.0
    else:
        mask[:, n // 2] = 0.0
    return mask


def spectral_derivative(spec: np.ndarray, grid: GridSpec, axis: int) -> np.ndarray:
    k1, k2 = grid.rfft_kappa()
    k = k1 if axis == 1 else k2
    return 1j * k * spec * _nyquist_zero(grid, axis)


def derivative(f: ScalarField, axis: int) -> ScalarField:
    """Spectral partial derivative along x_axis (axis is 1 or 2)."""
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    return ScalarField.from_spectral(f.grid, spectral_derivative(f.spectral, f.grid, axis))


def laplacian(f: ScalarField) -> ScalarField:
    k1, k2 = f.grid.rfft_kappa()
    return ScalarField.from_spectral(f.grid, -(k1**2 + k2**2) * f.spectral)


def inv_laplacian_symbol(grid: GridSpec) -> np.ndarray:
    k1, k2 = grid.rfft_kappa()
    ksq = k1**2 + k2**2
    ksq[0, 0] = 1.0
    sym = -1.0 / ksq
    sym[0, 0] = 0.0
    return sym


def inv_laplacian(f: ScalarField) -> ScalarField:
    """Periodic inverse Laplacian with the zero mode of the result set to 0."""
    return ScalarField.from_spectral(f.grid, inv_laplacian_symbol(f.grid) * f.spectral)


def perp_gradient(f: ScalarField) -> VectorField:
    """Symplectic gradient (-d2 f, d1 f)."""
    return VectorField(-derivative(f, 2), derivative(f, 1))


def divergence(u: VectorField) -> ScalarField:
    return derivative(u.u1, 1) + derivative(u.u2, 2)


def rot(u: VectorField) -> ScalarField:
    """Scalar curl  d1 u2 - d2 u1."""
    return derivative(u.u2, 1) - derivative(u.u1, 2)


def _lp_of_array(values: np.ndarray, p: float, cell_area: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(values)))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(values)
    scale = a.max()
    if scale == 0.0:
        return 0.0
    return float(scale * (np.sum((a / scale) ** p) * cell_area) ** (1.0 / p))


def evaluate_at(f: ScalarField, points, derivatives: bool = False):
    """Trigonometric interpolant of f at arbitrary points (direct mode sum).

    Returns values, or ``(values, gradients, hessians)`` when ``derivatives``
    is set.  Costs O(n^2) per point; meant for a handful of points.
    """
    g = f.grid
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    k1, k2 = g.rfft_kappa()
    n = g.n
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[n // 2] = 1.0
    C = f.spectral * w[None, :] / n**2
    vals, grads, hess = [], [], []
    for x1, x2 in pts:
        e = C * np.exp(1j * (k1 * (x1 + g.half_width) + k2 * (x2 + g.half_width)))
        vals.append(e.real.sum())
        if derivatives:
            grads.append([(1j * k1 * e).real.sum(), (1j * k2 * e).real.sum()])
            h11 = -(k1 * k1 * e).real.sum()
            h12 = -(k1 * k2 * e).real.sum()
            h22 = -(k2 * k2 * e).real.sum()
            hess.append([[h11, h12], [h12, h22]])
    if derivatives:
        return np.array(vals), np.array(grads), np.array(hess)
    return np.array(vals)


def sup_norm(f: ScalarField, candidates: int = 6, iterations: int = 8) -> float:
    """Sup of |f| for the band-limited interpolant.

    Starts from the largest grid values and polishes each local extremum with
    Newton steps on the trigonometric interpolant; never below the grid max.
    """
    a = np.abs(f.values)
    grid_max = float(a.max())
    if grid_max == 0.0:
        return 0.0
    g = f.grid
    flat = np.argsort(a, axis=None)[::-1]
    starts = []
    for idx in flat[: 64 * candidates]:
        i, j = np.unravel_index(idx, a.shape)
        if all(min(abs(i - p), g.n - abs(i - p)) + min(abs(j - q), g.n - abs(j - q)) > 3 for p, q in starts):
            starts.append((i, j))
        if len(starts) == candidates:
            break
    x = g.coords()
    best = grid_max
    for i, j in starts:
        pt = np.array([x[i], x[j]])
        for _ in range(iterations):
            _, gr, H = evaluate_at(f, pt, derivatives=True)
            try:
                stepv = np.linalg.solve(H[0], gr[0])
            except np.linalg.LinAlgError:
                break
            if np.linalg.norm(stepv) > g.spacing:
                break
            pt = pt - stepv
            if np.linalg.norm(stepv) < 1e-12 * g.half_width:
                break
        if np.all(np.abs(pt - [x[i], x[j]]) <= g.spacing):
            best = max(best, float(abs(evaluate_at(f, pt)[0])))
    return best


def lp_norm(f: ScalarField, p: float) -> float:
    """Rectangle-rule L^p norm over the box; p = inf gives the grid maximum."""
    return _lp_of_array(f.values, p, f.grid.cell_area)


def gradient_lp_norm(f: ScalarField, p: float) -> float:
    """||d1 f||_p + ||d2 f||_p."""
    return lp_norm(derivative(f, 1), p) + lp_norm(derivative(f, 2), p)


def sobolev_w1p_norm(f: ScalarField, p: float) -> float:
    """||f||_p + ||d1 f||_p + ||d2 f||_p for finite p >= 1."""
    if not np.isfinite(p):
        raise ValueError("W^{1,p} norm requires finite p")
    return lp_norm(f, p) + gradient_lp_norm(f, p)


def dealias_mask(n: int, rfft: bool = True) -> np.ndarray:
    """2/3-rule mask: keep modes with max(|m1|, |m2|) <= n/3."""
    keep1 = np.abs(np.fft.fftfreq(n, 1.0 / n)) <= n / 3
    keep2 = np.arange(n // 2 + 1) <= n / 3 if rfft else keep1
    return (keep1[:, None] & keep2[None, :]).astype(np.float64)


def dealias(coeffs: np.ndarray) -> np.ndarray:
    """Zero every mode with max(|m1|, |m2|) > n/3 of a full n x n coefficient array."""
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[0]
    if coeffs.shape != (n, n):
        raise ValueError("expected a square full coefficient array")
    return coeffs * dealias_mask(n, rfft=False)


_MAGIC = b"BEL1"


def write_snapshot(path: Union[str, Path], f: ScalarField) -> None:
    """Binary snapshot: b'BEL1', int32 n, float64 L (little-endian), row-major float64 values."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<i", f.grid.n))
        fh.write(struct.pack("<d", f.grid.half_width))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path: Union[str, Path]) -> ScalarField:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a BEL1 snapshot")
    (n,) = struct.unpack("<i", data[4:8])
    (half_width,) = struct.unpack("<d", data[8:16])
    values = np.frombuffer(data[16:], dtype="<f8")
    if values.size != n * n:
        raise ValueError(f"{path}: truncated snapshot ({values.size} values, expected {n * n})")
    return ScalarField(GridSpec(n, half_width), values.reshape(n, n))
