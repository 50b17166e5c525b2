"""Mollification, maximal function and singular averages on the torus

Every convolution here is evaluated spectrally against a kernel that is
sampled on the grid in minimum-image coordinates, so kernels are even
and their discrete transforms are real.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, ndimage

from torusflux.core.errors import DomainError, ResolutionError
from torusflux.fields.grid import PeriodicField, TorusGrid
from torusflux.fields.spectral import from_spectral, grad, to_spectral

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MollifierSpec:
    """Mollifier κ_ε built from the bump exp(-1/(1-|z/ε|²))

    Attributes:
        epsilon: Support radius ε
    """

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"mollifier scale must be positive, got {self.epsilon}")

    def check(self, grid: TorusGrid) -> None:
        if self.epsilon < 2.0 * grid.spacing * (1.0 - 1e-12):
            raise ResolutionError(
                f"mollifier scale {self.epsilon:.4g} is below two grid cells ({2 * grid.spacing:.4g})"
            )

    def weights(self, grid: TorusGrid) -> np.ndarray:
        """Kernel weights on the grid, summing to one"""
        self.check(grid)
        return _mollifier_weights(grid, self.epsilon)

    def transform(self, grid: TorusGrid) -> np.ndarray:
        """Real discrete transform of the kernel weights"""
        self.check(grid)
        return _mollifier_transform(grid, self.epsilon)


@lru_cache(maxsize=64)
def _mollifier_weights(grid: TorusGrid, epsilon: float) -> np.ndarray:
    r2 = (grid.distances() / epsilon) ** 2
    inside = r2 < 1.0
    weights = np.zeros(grid.shape)
    weights[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    weights /= weights.sum()
    weights.setflags(write=False)
    return weights


@lru_cache(maxsize=64)
def _mollifier_transform(grid: TorusGrid, epsilon: float) -> np.ndarray:
    transform = np.fft.fftn(_mollifier_weights(grid, epsilon)).real
    transform.setflags(write=False)
    return transform


def mollify(f: PeriodicField, spec: MollifierSpec) -> PeriodicField:
    """Convolve f with κ_ε

    Raises:
        ResolutionError: ε is smaller than two grid cells
    """
    kernel = spec.transform(f.grid)
    result = from_spectral(f.grid, to_spectral(f) * kernel)
    if f.nonnegative:
        # unit-mass nonnegative kernel; only FFT roundoff can go below zero
        return result.with_values(np.maximum(result.values, 0.0), nonnegative=True)
    return result


def dyadic_radii(n: int) -> Tuple[int, ...]:
    radii = []
    r = 1
    while r <= n // 2:
        radii.append(r)
        r *= 2
    return tuple(radii)


def maximal_function(f: PeriodicField) -> PeriodicField:
    """Discrete centered Hardy-Littlewood maximal function

    Maximum of |f| and its box averages over cubes of half-width r cells
    for r in {1, 2, 4, ..., n/2}.
    """
    if not f.is_scalar:
        raise DomainError("maximal_function expects a scalar field; take magnitude() first")
    data = np.abs(f.data)
    n = f.grid.n_per_axis
    result = data.copy()
    for r in dyadic_radii(n):
        size = 2 * r + 1
        if size >= n:
            averaged = np.full_like(data, data.mean())
        else:
            averaged = ndimage.uniform_filter(data, size=size, mode="wrap")
        np.maximum(result, averaged, out=result)
    return PeriodicField.scalar(f.grid, result, nonnegative=True)


@lru_cache(maxsize=None)
def _singular_cell_factor(dim: int) -> float:
    """∫ over the unit cell of |s|^{1-d}, centered at the origin"""
    if dim == 1:
        return 1.0
    if dim == 2:
        return 4.0 * np.arcsinh(1.0)
    value, _ = integrate.dblquad(lambda t, s: 1.0 / (1.0 + s * s + t * t), -1.0, 1.0, -1.0, 1.0)
    return 3.0 * value


@lru_cache(maxsize=64)
def _singular_transform(grid: TorusGrid, r: float) -> np.ndarray:
    h = grid.spacing
    d = grid.dim
    dist = grid.distances()
    cover = np.clip((r + 0.5 * h - dist) / h, 0.0, 1.0)
    weights = np.zeros(grid.shape)
    nonzero = dist > 0
    weights[nonzero] = cover[nonzero] * h ** d / dist[nonzero] ** (d - 1)
    weights.flat[0] = h * _singular_cell_factor(d)
    transform = np.fft.fftn(weights / r).real
    transform.setflags(write=False)
    return transform


def singular_average(g: PeriodicField, r: float) -> PeriodicField:
    """(1/r) ∫_{B(0,r)} g(x+z) |z|^{1-d} dz by midpoint quadrature

    The singular cell at z = 0 is integrated analytically. Boundary cells
    are weighted by the fraction of their width inside the ball.
    """
    grid = g.grid
    _check_radius(grid, r)
    result = from_spectral(grid, to_spectral(g) * _singular_transform(grid, float(r)))
    return result


def D_r(f: PeriodicField, r: float) -> PeriodicField:
    """Singular average of |∇f| over the ball of radius r

    Raises:
        ResolutionError: r is smaller than two grid cells
    """
    gradient = grad(f).magnitude()
    averaged = singular_average(gradient, r)
    return averaged.with_values(np.maximum(averaged.values, 0.0), nonnegative=True)


def _check_radius(grid: TorusGrid, r: float) -> None:
    if r < 2.0 * grid.spacing * (1.0 - 1e-12):
        raise ResolutionError(f"radius {r:.4g} is below two grid cells ({2 * grid.spacing:.4g})")
    if r > 0.5 * grid.length:
        raise DomainError(f"radius {r:.4g} exceeds half the period")


def measure_lagrange_constant(
    f: PeriodicField,
    n_pairs: int = 200,
    rng: Optional[np.random.Generator] = None,
    max_cells: Optional[int] = None,
) -> float:
    """Smallest C with |f(x)-f(y)| <= C|x-y|(D_{|x-y|}f(x) + D_{|x-y|}f(y)) on samples

    Pairs are axis-aligned: y = x + j·h·e_axis with 2 <= j <= max_cells.

    Returns:
        The largest observed ratio (0 when f is constant)
    """
    rng = rng or np.random.default_rng(0)
    grid = f.grid
    n = grid.n_per_axis
    max_cells = max_cells or n // 4
    data = f.data
    cache = {}
    worst = 0.0
    for _ in range(n_pairs):
        j = int(rng.integers(2, max_cells + 1))
        axis = int(rng.integers(0, grid.dim))
        x = tuple(int(i) for i in rng.integers(0, n, size=grid.dim))
        y = list(x)
        y[axis] = (y[axis] + j) % n
        y = tuple(y)
        if j not in cache:
            cache[j] = D_r(f, j * grid.spacing).data
        d_field = cache[j]
        rhs = j * grid.spacing * (d_field[x] + d_field[y])
        lhs = abs(data[x] - data[y])
        if rhs > 0:
            worst = max(worst, lhs / rhs)
    logger.debug("measured Lagrange constant %.4f over %d pairs", worst, n_pairs)
    return worst
