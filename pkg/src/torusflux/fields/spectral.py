"""Spectral calculus on torus grids

All derivatives differentiate the trigonometric interpolant exactly.
Odd-order derivatives drop the Nyquist mode, whose derivative is not
real-valued.
"""
import logging
from typing import Optional

import numpy as np

from torusflux.core.errors import DomainError
from torusflux.fields.grid import PeriodicField, TorusGrid

logger = logging.getLogger(__name__)

RESOLUTION_THRESHOLD = 1e-6
MEAN_TOLERANCE = 1e-10


def to_spectral(f: PeriodicField) -> np.ndarray:
    """Transform every component over the spatial axes"""
    return np.fft.fftn(f.values, axes=f.grid.spatial_axes)


def from_spectral(grid: TorusGrid, coeffs: np.ndarray, nonnegative: bool = False) -> PeriodicField:
    values = np.fft.ifftn(coeffs, axes=grid.spatial_axes).real
    return PeriodicField(grid, values, nonnegative)


def _odd_wavenumber(grid: TorusGrid, axis: int) -> np.ndarray:
    k = grid.wavenumbers()[axis].copy()
    # k has a single non-singleton axis
    k.flat[grid.n_per_axis // 2] = 0.0
    return k


def check_resolution(f: PeriodicField, name: str = "field") -> bool:
    """Warn when the two highest retained modes per axis carry energy

    Returns:
        True if the field is resolved
    """
    grid = f.grid
    power = np.abs(to_spectral(f)) ** 2
    total = float(power.sum())
    if total == 0.0:
        return True
    n = grid.n_per_axis
    high = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        j = np.abs(np.fft.fftfreq(n, d=1.0 / n))
        mask = (j >= n // 2 - 1).reshape([n if a == axis else 1 for a in range(grid.dim)])
        high = high | mask
    fraction = float(power[:, high].sum()) / total
    if fraction > RESOLUTION_THRESHOLD:
        logger.warning(
            "%s is under-resolved: %.2e of its spectral energy sits in the top two modes",
            name,
            fraction,
        )
        return False
    return True


def partial(f: PeriodicField, axis: int) -> PeriodicField:
    """Derivative of every component along one axis"""
    k = _odd_wavenumber(f.grid, axis)
    return from_spectral(f.grid, 1j * k * to_spectral(f))


def grad(f: PeriodicField, check: bool = False) -> PeriodicField:
    """Gradient of a scalar field"""
    if not f.is_scalar:
        raise DomainError("grad expects a scalar field")
    if check:
        check_resolution(f, "grad input")
    coeffs = to_spectral(f)[0]
    parts = [1j * _odd_wavenumber(f.grid, axis) * coeffs for axis in range(f.grid.dim)]
    return from_spectral(f.grid, np.stack(parts))


def div(u: PeriodicField, check: bool = False) -> PeriodicField:
    """Divergence of a vector field"""
    grid = u.grid
    if u.components != grid.dim:
        raise DomainError(f"div expects a {grid.dim}-component vector field")
    if check:
        check_resolution(u, "div input")
    coeffs = to_spectral(u)
    total = np.zeros(grid.shape, dtype=complex)
    for axis in range(grid.dim):
        total = total + 1j * _odd_wavenumber(grid, axis) * coeffs[axis]
    return from_spectral(grid, total[np.newaxis])


def laplacian(f: PeriodicField, check: bool = False) -> PeriodicField:
    """Laplacian, componentwise for vector fields"""
    if check:
        check_resolution(f, "laplacian input")
    return from_spectral(f.grid, -f.grid.k_squared() * to_spectral(f))


def inv_laplacian(f: PeriodicField, zero_mean: bool = False) -> PeriodicField:
    """Solve -Δψ = f for the zero-mean ψ

    Args:
        f: Scalar or vector field
        zero_mean: Subtract the mean of f first

    Returns:
        ψ = (-Δ)^{-1} f with mean exactly zero

    Raises:
        DomainError: f has nonzero mean and zero_mean is not set
    """
    coeffs = to_spectral(f)
    zero = (slice(None),) + (0,) * f.grid.dim
    if not zero_mean:
        scale = max(1.0, float(np.abs(f.values).max()))
        mean = np.abs(coeffs[zero]).max() / f.grid.size
        if mean > MEAN_TOLERANCE * scale:
            raise DomainError(f"inverse Laplacian input has mean {mean:.3e}; pass zero_mean=True")
    k2 = f.grid.k_squared().copy()
    k2.flat[0] = 1.0
    out = coeffs / k2
    out[zero] = 0.0
    return from_spectral(f.grid, out)


def hessian(f: PeriodicField) -> np.ndarray:
    """Second derivatives of a scalar field

    Returns:
        Array of shape (dim, dim) + grid.shape
    """
    grid = f.grid
    coeffs = to_spectral(f)[0]
    k = grid.wavenumbers()
    out = np.empty((grid.dim, grid.dim) + grid.shape)
    for a in range(grid.dim):
        for b in range(a, grid.dim):
            if a == b:
                mult = -(k[a] ** 2)
            else:
                mult = -_odd_wavenumber(grid, a) * _odd_wavenumber(grid, b)
            out[a, b] = np.fft.ifftn(mult * coeffs).real
            out[b, a] = out[a, b]
    return out


def gradient_tensor(u: PeriodicField) -> np.ndarray:
    """Jacobian ∂_b u_a of a vector field

    Returns:
        Array of shape (components, dim) + grid.shape
    """
    grid = u.grid
    coeffs = to_spectral(u)
    out = np.empty((u.components, grid.dim) + grid.shape)
    for b in range(grid.dim):
        out[:, b] = np.fft.ifftn(1j * _odd_wavenumber(grid, b) * coeffs, axes=grid.spatial_axes).real
    return out


def heat_multiplier(grid: TorusGrid, dt: float) -> np.ndarray:
    """Spectral multiplier of the heat semigroup e^{dtΔ}"""
    return np.exp(-grid.k_squared() * dt)


def heat_flow(u: PeriodicField, dt: float, coeffs: Optional[np.ndarray] = None) -> PeriodicField:
    """Exact solution of ∂t u = Δu after time dt"""
    if coeffs is None:
        coeffs = to_spectral(u)
    return from_spectral(u.grid, heat_multiplier(u.grid, dt) * coeffs)
