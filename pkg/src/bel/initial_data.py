"""Explicit data: quadrupole bumps, the vorticity omega0^{M,N}, the Fourier-side
profile rho and the frequency-localised perturbation beta_{k,lambda}.

Concrete profiles (the construction only fixes support, range and integral):

* spatial bump  phi(x) = exp(1 - 1/(1 - |x|^2/a^2)) on |x| < a with a = 1/4,
  so each dyadic copy phi_k sits in the balls B((+-2^-k, +-2^-k), 2^-(k+2));
* frequency bump chi_hat(xi) = c exp(-1/(1 - |xi|^2)) on the unit ball with
  unit integral (c = 1 / (pi (1/e - E1(1)))).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import exp1, j0

from .spectral import GridSpec, ScalarField, irfft2

__all__ = [
    "BUMP_RADIUS",
    "QuadrupoleParams",
    "PerturbationParams",
    "RhoSpec",
    "UnresolvedScaleError",
    "bump",
    "bump_gradient",
    "phi0",
    "phi0_gradient",
    "phi_k",
    "phi_k_gradient",
    "omega0",
    "omega0_values",
    "omega0_gradient",
    "omega0_w1p_quadrature",
    "beta",
    "beta_envelope_spectrum",
    "envelope_spectrum",
    "envelope_values",
    "beta_spectrum_analytic",
    "perturbed_sequence",
]

BUMP_RADIUS = 0.25
_QUADRANTS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class UnresolvedScaleError(ValueError):
    pass


# -- spatial bumps -----------------------------------------------------------


def bump(x1, x2, radius: float = BUMP_RADIUS):
    s = (np.asarray(x1) ** 2 + np.asarray(x2) ** 2) / radius**2
    inside = s < 1.0
    out = np.zeros(np.broadcast(x1, x2).shape)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return out


def bump_gradient(x1, x2, radius: float = BUMP_RADIUS):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    s = (x1**2 + x2**2) / radius**2
    inside = s < 1.0
    g1 = np.zeros(x1.shape)
    g2 = np.zeros(x1.shape)
    si = s[inside]
    common = -np.exp(1.0 - 1.0 / (1.0 - si)) / (1.0 - si) ** 2 * 2.0 / radius**2
    g1[inside] = common * x1[inside]
    g2[inside] = common * x2[inside]
    return g1, g2


def phi0(x1, x2):
    """sum_{e1,e2 = +-1} e1 e2 phi(x1 - e1, x2 - e2); odd in each coordinate."""
    return sum(e1 * e2 * bump(x1 - e1, x2 - e2) for e1, e2 in _QUADRANTS)


def phi0_gradient(x1, x2):
    g1 = g2 = 0.0
    for e1, e2 in _QUADRANTS:
        a, b = bump_gradient(x1 - e1, x2 - e2)
        g1 = g1 + e1 * e2 * a
        g2 = g2 + e1 * e2 * b
    return g1, g2


def _amplitude_k(k: int, p: float) -> float:
    return 2.0 ** ((-1.0 + 2.0 / p) * k)


def phi_k(x1, x2, k: int, p: float):
    """2^{(-1+2/p)k} phi0(2^k x)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s = 2.0**k
    return _amplitude_k(k, p) * phi0(s * np.asarray(x1), s * np.asarray(x2))


def phi_k_gradient(x1, x2, k: int, p: float):
    s = 2.0**k
    g1, g2 = phi0_gradient(s * np.asarray(x1), s * np.asarray(x2))
    c = _amplitude_k(k, p) * s
    return c * g1, c * g2


# -- quadrupole vorticity ------------------------------------------------------


@dataclass(frozen=True)
class QuadrupoleParams:
    M: float = 4.0
    N: int = 2
    N0: int = 2
    p: float = 2.5

    def __post_init__(self):
        if not 2.0 < self.p <= 3.0:
            raise ValueError(f"p must lie in (2, 3], got {self.p}")
        if self.N0 < 1 or self.N < 1:
            raise ValueError("N0 and N must be positive integers")
        if self.M < 2:
            raise ValueError("M must be >= 2")

    @property
    def scales(self) -> range:
        return range(self.N0, self.N0 + self.N + 1)

    @property
    def prefactor(self) -> float:
        return self.M**-2 * self.N ** (-1.0 / self.p)

    @property
    def finest_radius(self) -> float:
        return BUMP_RADIUS * 2.0 ** -(self.N0 + self.N)

    @property
    def outer_extent(self) -> float:
        """Largest |x_i| reached by the support."""
        return (1.0 + BUMP_RADIUS) * 2.0**-self.N0

    def bump_centres(self):
        """(k, centre) for every bump of every scale."""
        for k in self.scales:
            for e1, e2 in _QUADRANTS:
                yield k, e1 * e2, (e1 * 2.0**-k, e2 * 2.0**-k)


def omega0_values(x1, x2, params: QuadrupoleParams):
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    return params.prefactor * sum(phi_k(x1, x2, k, params.p) for k in params.scales)


def omega0_gradient(x1, x2, params: QuadrupoleParams):
    g1 = g2 = 0.0
    for k in params.scales:
        a, b = phi_k_gradient(x1, x2, k, params.p)
        g1 = g1 + a
        g2 = g2 + b
    return params.prefactor * g1, params.prefactor * g2


def check_resolution(params: QuadrupoleParams, grid: GridSpec, cells_per_radius: float = 8.0):
    if params.finest_radius < cells_per_radius * grid.spacing:
        raise UnresolvedScaleError(
            f"unresolved finest scale: bump radius {params.finest_radius:.3e} needs "
            f"{cells_per_radius:g} cells of width <= {params.finest_radius / cells_per_radius:.3e}, "
            f"grid spacing is {grid.spacing:.3e}"
        )
    if params.outer_extent > 0.9 * grid.half_width:
        raise ValueError(
            f"support reaches |x_i| = {params.outer_extent:.3f}, outside the trusted "
            f"interior of the box (0.9 L = {0.9 * grid.half_width:.3f})"
        )


def omega0(params: QuadrupoleParams, grid: GridSpec, cells_per_radius: float = 8.0) -> ScalarField:
    """omega0^{M,N} = M^-2 N^{-1/p} sum_{N0 <= k <= N0+N} phi_k sampled on ``grid``."""
    check_resolution(params, grid, cells_per_radius)
    x = grid.coords()
    h = grid.spacing
    out = np.zeros((grid.n, grid.n))
    for k, sign, (c1, c2) in params.bump_centres():
        r = BUMP_RADIUS * 2.0**-k
        i = np.nonzero(np.abs(x - c1) < r + h)[0]
        j = np.nonzero(np.abs(x - c2) < r + h)[0]
        X1, X2 = np.meshgrid(x[i], x[j], indexing="ij")
        amp = params.prefactor * _amplitude_k(k, params.p) * sign
        out[np.ix_(i, j)] += amp * bump(2.0**k * X1 - np.sign(c1), 2.0**k * X2 - np.sign(c2))
    return ScalarField(grid, out)


def omega0_w1p_quadrature(params: QuadrupoleParams, points_per_radius: int = 96) -> dict:
    """Component L^p norms of omega0 by rectangle-rule quadrature on one patch per bump.

    The supports of the bumps are pairwise disjoint, so the p-th powers of the
    global norms are the sums of the per-patch contributions.  Returns the
    dict ``{"lp", "d1", "d2", "w1p"}``.
    """
    p = params.p
    acc = np.zeros(3)
    for k, sign, (c1, c2) in params.bump_centres():
        r = BUMP_RADIUS * 2.0**-k
        h = r / points_per_radius
        t = (np.arange(-points_per_radius, points_per_radius) + 0.5) * h
        X1, X2 = np.meshgrid(c1 + t, c2 + t, indexing="ij")
        f = omega0_values(X1, X2, params)
        g1, g2 = omega0_gradient(X1, X2, params)
        for i, arr in enumerate((f, g1, g2)):
            acc[i] += np.sum(np.abs(arr) ** p) * h * h
    lp, d1, d2 = acc ** (1.0 / p)
    return {"lp": lp, "d1": d1, "d2": d2, "w1p": lp + d1 + d2}


# -- Fourier-side profile rho -------------------------------------------------

_CHI_INTEGRAL = np.pi * (np.exp(-1.0) - exp1(1.0))


def chi_hat(xi1, xi2):
    """Radial C-infinity bump on the unit ball, 0 <= chi_hat <= 1, unit integral."""
    s = np.asarray(xi1) ** 2 + np.asarray(xi2) ** 2
    out = np.zeros(np.broadcast(xi1, xi2).shape)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside])) / _CHI_INTEGRAL
    return out


@lru_cache(maxsize=4)
def _chi_radial_table(r_max: float, dr: float, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    weight = 2.0 * np.pi * w * chi_hat(s, 0.0) * s
    r = np.arange(0.0, r_max + dr, dr)
    vals = np.empty_like(r)
    for i in range(0, r.size, 2048):
        blk = r[i : i + 2048]
        vals[i : i + 2048] = j0(2.0 * np.pi * np.outer(blk, s)) @ weight
    return CubicSpline(r, vals)


@dataclass(frozen=True)
class RhoSpec:
    """rho_hat(xi) = chi_hat(xi - xi0) + chi_hat(xi + xi0) with xi0 = (2, 0) (cycles)."""

    xi0: tuple[float, float] = (2.0, 0.0)

    def rho_hat(self, xi1, xi2):
        a, b = self.xi0
        return chi_hat(xi1 - a, xi2 - b) + chi_hat(xi1 + a, xi2 + b)

    @property
    def support_radius(self) -> float:
        return float(np.hypot(*self.xi0)) + 1.0

    def chi(self, r, r_max: float = 200.0):
        """Radial inverse transform of chi_hat by Hankel quadrature (zero beyond r_max)."""
        r = np.abs(np.asarray(r, dtype=np.float64))
        table = _chi_radial_table(r_max, 2e-3, 600)
        return np.where(r <= r_max, table(np.minimum(r, r_max)), 0.0)

    def rho(self, x1, x2):
        """Pointwise rho(x) = 2 cos(2 pi <xi0, x>) chi(|x|)."""
        x1 = np.asarray(x1, float)
        x2 = np.asarray(x2, float)
        a, b = self.xi0
        return 2.0 * np.cos(2.0 * np.pi * (a * x1 + b * x2)) * self.chi(np.hypot(x1, x2))

    def rho_hat_lq(self, q: float, n: int = 801) -> float:
        """||rho_hat||_{L^q} by quadrature over its support."""
        R = self.support_radius
        t = np.linspace(-R, R, n)
        h = t[1] - t[0]
        X, Y = np.meshgrid(t, t, indexing="ij")
        v = self.rho_hat(X, Y)
        if q == np.inf:
            return float(v.max())
        return float((np.sum(v**q) * h * h) ** (1.0 / q))


# -- perturbation beta_{k,lambda} ---------------------------------------------


@dataclass(frozen=True)
class PerturbationParams:
    """lambda = 3n and k = lambda^2, placed at x* and its three reflections."""

    n: int
    p: float = 2.5
    xstar: tuple[float, float] = (0.2, 0.2)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 2.0 < self.p <= 3.0:
            raise ValueError(f"p must lie in (2, 3], got {self.p}")
        if self.lam / (2.0 * np.pi) <= 2.0:
            raise ValueError(
                f"n={self.n}: lambda/(2 pi) = {self.lam / (2 * np.pi):.2f} must exceed 2"
            )

    @property
    def lam(self) -> float:
        return 3.0 * self.n

    @property
    def k(self) -> int:
        return 9 * int(self.n) ** 2

    @property
    def amplitude(self) -> float:
        return self.lam ** (-1.0 + 2.0 / self.p) / np.sqrt(self.k)

    @property
    def spectrally_separated(self) -> bool:
        """Shifted rho_hat support misses the unit ball (lambda/(2 pi) > |xi0| + 2)."""
        return self.lam / (2.0 * np.pi) > 4.0

    def reflected_centres(self):
        a, b = self.xstar
        return [((e1 * a, e2 * b), e1 * e2) for e1, e2 in _QUADRANTS]

    def angular_extent(self, rho: "RhoSpec") -> tuple[float, float]:
        """Largest |kappa_1|, |kappa_2| in the support of beta_hat."""
        R = rho.support_radius
        return self.k + 2 * np.pi * self.lam * R, 2 * np.pi * self.lam * 1.0


def envelope_spectrum(pert: PerturbationParams, rho: RhoSpec, xi1, xi2):
    """Fourier transform of S(x) = sum_e e1 e2 rho(lambda (x - x*_e)) at cycles xi."""
    lam = pert.lam
    a, b = pert.xstar
    return (
        -4.0
        / lam**2
        * rho.rho_hat(xi1 / lam, xi2 / lam)
        * np.sin(2 * np.pi * xi1 * a)
        * np.sin(2 * np.pi * xi2 * b)
    )


def beta_envelope_spectrum(pert: PerturbationParams, rho: RhoSpec, grid: GridSpec) -> np.ndarray:
    """Raw rfft2 array of the envelope S on ``grid`` (exact periodisation)."""
    n = grid.n
    m1 = grid.mode_indices()
    m2 = np.arange(n // 2 + 1)
    xi1 = (m1 / (2 * grid.half_width))[:, None]
    xi2 = (m2 / (2 * grid.half_width))[None, :]
    c = envelope_spectrum(pert, rho, xi1, xi2) / (2 * grid.half_width) ** 2
    s1 = np.where(m1 % 2 == 0, 1.0, -1.0)[:, None]
    s2 = np.where(m2 % 2 == 0, 1.0, -1.0)[None, :]
    return c * s1 * s2 * n**2


def beta_spectrum_analytic(pert: PerturbationParams, rho: RhoSpec, xi1, xi2):
    """Closed-form Fourier transform of beta_{k,lambda} at cycles frequency xi.

    Direct transcription of the modulation formula with xi_{+-} = (xi1 +- k/2pi, xi2).
    """
    lam, k, A = pert.lam, pert.k, pert.amplitude
    xi1 = np.asarray(xi1, float)
    xi2 = np.asarray(xi2, float)
    out = np.zeros(np.broadcast(xi1, xi2).shape, dtype=complex)
    for (c1, c2), sign in pert.reflected_centres():
        for shift, branch in ((-k / (2 * np.pi), 1.0), (k / (2 * np.pi), -1.0)):
            z1 = xi1 + shift
            phase = np.exp(-2j * np.pi * (z1 * c1 + xi2 * c2))
            out += branch * sign / 2j * phase * rho.rho_hat(z1 / lam, xi2 / lam) / lam**2
    return A * out


def carrier_is_periodic(pert: PerturbationParams, grid: GridSpec) -> bool:
    m = pert.k * grid.half_width / np.pi
    return abs(m - round(m)) < 1e-9


def envelope_values(pert: PerturbationParams, rho: RhoSpec, x1, x2):
    """Pointwise S(x) = sum_e e1 e2 rho(lambda (x - x*_e)) via the radial table for rho."""
    lam = pert.lam
    return sum(
        sign * rho.rho(lam * (x1 - c1), lam * (x2 - c2)) for (c1, c2), sign in pert.reflected_centres()
    )


def beta(
    pert: PerturbationParams, rho: RhoSpec, grid: GridSpec, method: str = "spectral"
) -> ScalarField:
    """beta_{k,lambda} on ``grid``.

    ``method="spectral"`` synthesises the envelope from samples of its Fourier
    transform (exact periodisation of the four translates); ``"pointwise"``
    evaluates rho directly in physical space.  Either way the envelope is
    multiplied by the amplitude and sin(k x1), which must be periodic on the
    box, and the whole spectrum must sit below the grid Nyquist.
    """
    if not carrier_is_periodic(pert, grid):
        raise UnresolvedScaleError(
            f"sin(k x1) with k={pert.k} is not periodic on the box of half-width "
            f"{grid.half_width:g} (need k L / pi integer)"
        )
    ext1, ext2 = pert.angular_extent(rho)
    if ext1 >= grid.nyquist:
        raise UnresolvedScaleError(
            f"unresolved oscillation: beta reaches |kappa_1| = {ext1:.0f}, "
            f"grid Nyquist is {grid.nyquist:.0f}"
        )
    X1, X2 = grid.mesh()
    if method == "spectral":
        S = irfft2(beta_envelope_spectrum(pert, rho, grid), grid.n)
    elif method == "pointwise":
        S = envelope_values(pert, rho, X1, X2)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ScalarField(grid, pert.amplitude * S * np.sin(pert.k * X1))


def perturbed_sequence(
    q: QuadrupoleParams, pert: PerturbationParams, rho: RhoSpec, grid: GridSpec
) -> ScalarField:
    """omega_{0,n} = omega0 + beta_n."""
    if q.p != pert.p:
        raise ValueError("quadrupole and perturbation must share the exponent p")
    return omega0(q, grid) + beta(pert, rho, grid)
