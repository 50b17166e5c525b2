"""Compactness functionals

The translation functional

    R_h = Σ_t dt ∬ K_h(x - y) |ρ(t, x) - ρ(t, y)|^p w(t, x) dx dy

with K_h(z) = (|z| + h)^{-d} for |z| <= 1/2 and (1/2 + h)^{-d} otherwise,
where z is measured in periods (unit torus). For p = 2 the double sum
expands into three FFT convolutions; other exponents and the smoothed
modulus sum over offsets directly.

The oscillation defect takes the largest space-time integral of
|T_k(ρ_i) - T_k(ρ)|^α over a finite list of truncation levels k.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from torusflux.core.errors import DomainError
from torusflux.fields.grid import PeriodicField, TorusGrid
from torusflux.fields.spectral import to_spectral
from torusflux.laws.truncation import truncation_T

logger = logging.getLogger(__name__)

Series = Union[PeriodicField, Sequence[PeriodicField]]


def smoothed_modulus(w: Union[float, np.ndarray], sigma: float) -> Union[float, np.ndarray]:
    """C¹ modulus: |w| - σ/2 for |w| >= σ, w²/(2σ) below

    Raises:
        DomainError: sigma is not positive
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    arr = np.abs(np.asarray(w, dtype=np.float64))
    out = np.where(arr >= sigma, arr - 0.5 * sigma, arr ** 2 / (2.0 * sigma))
    return float(out) if np.ndim(w) == 0 else out


def smoothed_sign(w: Union[float, np.ndarray], sigma: float) -> Union[float, np.ndarray]:
    """Derivative of smoothed_modulus: sign(w) for |w| >= σ, w/σ below"""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    arr = np.asarray(w, dtype=np.float64)
    out = np.where(np.abs(arr) >= sigma, np.sign(arr), arr / sigma)
    return float(out) if np.ndim(w) == 0 else out


@dataclass(frozen=True)
class KernelSpec:
    """Kernel K_h and the functional options

    Attributes:
        h: Scale in (0, 1/2)
        sigma: Smoothing of the modulus (plain |·| if None)
        p: Exponent of the difference
        normalized: Divide by ‖K_h‖₁
    """

    h: float
    sigma: Optional[float] = None
    p: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        if not 0 < self.h < 0.5:
            raise DomainError(f"kernel scale h must lie in (0, 1/2), got {self.h}")
        if self.sigma is not None and not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.p > 0:
            raise DomainError(f"exponent p must be positive, got {self.p}")

    def values(self, grid: TorusGrid) -> np.ndarray:
        """K_h at every grid offset, in unit-torus coordinates"""
        return _kernel_values(grid, self.h)

    def discrete_norm(self, grid: TorusGrid) -> float:
        """Riemann sum of K_h over the unit torus"""
        return float(self.values(grid).sum()) / grid.size


@lru_cache(maxsize=64)
def _kernel_values(grid: TorusGrid, h: float) -> np.ndarray:
    distance = grid.distances() / grid.length
    d = grid.dim
    values = np.where(distance <= 0.5, (distance + h) ** (-d), (0.5 + h) ** (-d))
    values.setflags(write=False)
    return values


_BALL_VOLUME = {1: 1.0, 2: np.pi / 4.0, 3: np.pi / 6.0}
_SPHERE_AREA = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}


def kernel_l1_norm(h: float, dim: int) -> float:
    """‖K_h‖ in L¹ of the unit torus, in closed form

    The ball |z| <= 1/2 contributes the radial integral; the rest of the
    unit cube carries the constant (1/2 + h)^{-d}.
    """
    if not 0 < h < 0.5:
        raise DomainError(f"kernel scale h must lie in (0, 1/2), got {h}")
    log_term = np.log((0.5 + h) / h)
    if dim == 1:
        radial = log_term
    elif dim == 2:
        radial = log_term + h / (0.5 + h) - 1.0
    elif dim == 3:
        radial = log_term - 1.5 + 2.0 * h / (0.5 + h) - h ** 2 / (2.0 * (0.5 + h) ** 2)
    else:
        raise DomainError(f"dimension must be 1, 2 or 3, got {dim}")
    outside = (1.0 - _BALL_VOLUME[dim]) * (0.5 + h) ** (-dim)
    return float(_SPHERE_AREA[dim] * radial + outside)


def kernel_l1_quadrature(h: float, dim: int) -> float:
    """The same norm by adaptive quadrature of the radial profile"""
    radial, _ = integrate.quad(lambda r: r ** (dim - 1) / (r + h) ** dim, 0.0, 0.5, epsabs=1e-14, epsrel=1e-13)
    outside = (1.0 - _BALL_VOLUME[dim]) * (0.5 + h) ** (-dim)
    return float(_SPHERE_AREA[dim] * radial + outside)


def _as_series(snapshots: Series) -> List[PeriodicField]:
    if isinstance(snapshots, PeriodicField):
        return [snapshots]
    return list(snapshots)


def _offset_sum(rho: np.ndarray, weight: np.ndarray, kernel: np.ndarray, spec: KernelSpec) -> float:
    total = 0.0
    for offset in np.ndindex(*kernel.shape):
        k = kernel[offset]
        shifted = np.roll(rho, tuple(-o for o in offset), axis=tuple(range(rho.ndim)))
        diff = rho - shifted
        if spec.sigma is not None:
            magnitude = smoothed_modulus(diff, spec.sigma)
        else:
            magnitude = np.abs(diff)
        if spec.p != 1.0:
            magnitude = magnitude ** spec.p
        total += k * float(np.sum(weight * magnitude))
    return total


def _quadratic_sum(rho: np.ndarray, weight: np.ndarray, kernel: np.ndarray) -> float:
    """Σ_x Σ_z K(z) w(x) (ρ(x) - ρ(x+z))² through three convolutions"""
    kernel_hat = np.fft.fftn(kernel)

    def smooth(f):
        # K is even, so correlation and convolution agree
        return np.fft.ifftn(np.fft.fftn(f) * kernel_hat).real

    first = kernel.sum() * np.sum(weight * rho ** 2)
    cross = np.sum(weight * rho * smooth(rho))
    last = np.sum(weight * smooth(rho ** 2))
    return float(first - 2.0 * cross + last)


def kolmogorov_functional(
    snapshots: Series,
    spec: KernelSpec,
    weight_snapshots: Optional[Series] = None,
    dt: float = 1.0,
) -> float:
    """Translation functional R_h of a time series of densities

    Args:
        snapshots: Densities at the sample times (or a single field)
        spec: Kernel scale and options
        weight_snapshots: Weights w at the same times (w ≡ 1 if None)
        dt: Time weight of each sample

    Raises:
        DomainError: Empty series or mismatched weights
    """
    series = _as_series(snapshots)
    if not series:
        raise DomainError("kolmogorov_functional needs at least one snapshot")
    weights = _as_series(weight_snapshots) if weight_snapshots is not None else None
    if weights is not None and len(weights) != len(series):
        raise DomainError("weight snapshots must match the density snapshots")

    grid = series[0].grid
    kernel = spec.values(grid)
    # x in physical cells, z in unit-torus cells
    measure = grid.cell_volume / grid.size
    total = 0.0
    for i, rho in enumerate(series):
        w = weights[i].data if weights is not None else np.ones(grid.shape)
        if spec.p == 2.0 and spec.sigma is None:
            total += dt * _quadratic_sum(rho.data, w, kernel)
        else:
            total += dt * _offset_sum(rho.data, w, kernel, spec)
    value = total * measure
    if spec.normalized:
        value /= spec.discrete_norm(grid)
    return max(value, 0.0)


def kernel_table(
    snapshots: Series,
    h_list: Sequence[float],
    weight_snapshots: Optional[Series] = None,
    sigma: Optional[float] = None,
    p: float = 1.0,
    normalized: bool = True,
    dt: float = 1.0,
) -> List[Dict[str, Any]]:
    """R_h for every h in h_list, as rows {"h", "value"}"""
    rows = []
    for h in h_list:
        spec = KernelSpec(h=float(h), sigma=sigma, p=p, normalized=normalized)
        value = kolmogorov_functional(snapshots, spec, weight_snapshots, dt)
        rows.append({"h": float(h), "value": value})
    return rows


def _defect_at(sequence: List[List[PeriodicField]], limit: List[PeriodicField], alpha: float, k: float, dt: float) -> float:
    worst = 0.0
    limits = [truncation_T(k, f.data) for f in limit]
    for member in sequence:
        if len(member) != len(limit):
            raise DomainError("every sequence member needs as many time samples as the limit")
        total = 0.0
        for sample, target in zip(member, limits):
            gap = np.abs(truncation_T(k, sample.data) - target) ** alpha
            total += dt * float(np.sum(gap)) * sample.grid.cell_volume
        worst = max(worst, total)
    return worst


def defect_table(
    sequence: Sequence[Series],
    limit: Series,
    alpha: float = 2.0,
    k_list: Sequence[float] = (1, 2, 4, 8, 16),
    dt: float = 1.0,
) -> List[Dict[str, Any]]:
    """Largest ∫∫|T_k(ρ_i) - T_k(ρ)|^α over the sequence, per k

    Raises:
        DomainError: Empty sequence, alpha <= 0 or k < 1
    """
    members = [_as_series(member) for member in sequence]
    if not members:
        raise DomainError("oscillation defect needs a nonempty sequence")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    target = _as_series(limit)
    return [{"k": float(k), "value": _defect_at(members, target, alpha, float(k), dt)} for k in k_list]


def oscillation_defect(
    sequence: Sequence[Series],
    limit: Series,
    alpha: float = 2.0,
    k_list: Sequence[float] = (1, 2, 4, 8, 16),
    dt: float = 1.0,
) -> float:
    """max over k_list and the sequence of Σ_t dt ∫|T_k(ρ_i) - T_k(ρ)|^α

    Each member of the sequence is a field or a time series of fields
    sampled at the same times as the limit. The finite k_list gives a
    lower bound of the supremum over k >= 1.

    Raises:
        DomainError: Empty sequence, alpha <= 0 or k < 1
    """
    rows = defect_table(sequence, limit, alpha, k_list, dt)
    return max(row["value"] for row in rows)
