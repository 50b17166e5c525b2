"""Weight function w with ∂t w + v·∇w + Λw = 0

Λ = c1 + c2·M(|∇u|) + c3·|G| + c4·M(ρ^γ), with M the discrete maximal
function. A step traces characteristics back with linear interpolation,
then applies the exact decay exp(-Λ·dt). Both stages keep w in [0, 1].
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy import ndimage

from torusflux.core.errors import DomainError
from torusflux.fields.filters import maximal_function
from torusflux.fields.grid import PeriodicField
from torusflux.fields.spectral import gradient_tensor

logger = logging.getLogger(__name__)

BUDGET_TOLERANCE = 1e-2


@dataclass(frozen=True)
class WeightRates:
    """Constants of the decay rate Λ

    Attributes:
        c1: Constant rate
        c2: Coefficient of M(|∇u|)
        c3: Coefficient of |G|
        c4: Coefficient of M(ρ^γ)
    """

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 0.0

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3, self.c4) < 0:
            raise DomainError("weight rate constants must be nonnegative")

    @classmethod
    def from_config(cls, weight: Dict[str, Any]) -> "WeightRates":
        return cls(
            c1=float(weight["c1"]),
            c2=float(weight["c2"]),
            c3=float(weight["c3"]),
            c4=float(weight["c4"]),
        )


def gradient_magnitude(u: PeriodicField) -> PeriodicField:
    """Frobenius norm of ∇u"""
    jacobian = gradient_tensor(u)
    norm = np.sqrt(np.sum(jacobian ** 2, axis=(0, 1)))
    return PeriodicField.scalar(u.grid, norm, nonnegative=True)


def decay_rate(
    u: PeriodicField,
    G: PeriodicField,
    rates: WeightRates,
    rho: Optional[PeriodicField] = None,
    gamma: float = 2.0,
) -> PeriodicField:
    """Λ on the grid

    Raises:
        DomainError: c4 > 0 without a density
    """
    total = rates.c1 + rates.c3 * np.abs(G.data)
    if rates.c2 > 0:
        total = total + rates.c2 * maximal_function(gradient_magnitude(u)).data
    if rates.c4 > 0:
        if rho is None:
            raise DomainError("the M(ρ^γ) rate term needs the density")
        pressure_like = PeriodicField.scalar(u.grid, rho.data ** gamma, nonnegative=True)
        total = total + rates.c4 * maximal_function(pressure_like).data
    return PeriodicField.scalar(u.grid, np.broadcast_to(total, u.grid.shape), nonnegative=True)


def initial_weight(rho0: PeriodicField, kind: str = "one", cap: Optional[float] = None) -> PeriodicField:
    """w₀ = 1, or min(1, M/ρ₀) for kind "capped" with level M = cap

    Raises:
        DomainError: Unknown kind or missing/invalid cap
    """
    if kind == "one":
        return PeriodicField.constant(rho0.grid, 1.0)
    if kind == "capped":
        if cap is None or not cap > 0:
            raise DomainError("capped initial weight needs a positive cap")
        data = np.ones(rho0.grid.shape)
        above = rho0.data > cap
        data[above] = cap / rho0.data[above]
        return PeriodicField.scalar(rho0.grid, data, nonnegative=True)
    raise DomainError(f"unknown initial weight '{kind}'")


def advect(w: PeriodicField, v: PeriodicField, dt: float) -> PeriodicField:
    """Semi-Lagrangian step: w(x - dt·v(x)) by periodic linear interpolation"""
    grid = w.grid
    index = np.indices(grid.shape, dtype=np.float64)
    departure = index - dt * v.values / grid.spacing
    traced = ndimage.map_coordinates(w.data, departure, order=1, mode="grid-wrap")
    return PeriodicField.scalar(grid, np.clip(traced, 0.0, 1.0), nonnegative=True)


def weight_evolve(
    w: PeriodicField,
    u: PeriodicField,
    G: PeriodicField,
    c1: float,
    c2: float,
    c3: float,
    dt: float,
    c4: float = 0.0,
    rho: Optional[PeriodicField] = None,
    gamma: float = 2.0,
    velocity: Optional[PeriodicField] = None,
) -> PeriodicField:
    """Advance w by dt

    Args:
        w: Weight in [0, 1]
        u: Velocity entering the rate Λ
        G: Effective viscous flux
        c1, c2, c3, c4: Rate constants
        dt: Step
        rho: Density for the c4 term
        gamma: Exponent of the c4 term
        velocity: Advecting velocity (u if None)
    """
    rate = decay_rate(u, G, WeightRates(c1, c2, c3, c4), rho, gamma)
    return decay(advect(w, u if velocity is None else velocity, dt), rate, dt)


def decay(w: PeriodicField, rate: PeriodicField, dt: float) -> PeriodicField:
    return PeriodicField.scalar(w.grid, w.data * np.exp(-rate.data * dt), nonnegative=True)


def rho_log_weight(rho: PeriodicField, w: PeriodicField) -> float:
    """∫ρ|log w|; infinite where w vanishes on positive density"""
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.abs(np.log(w.data))
        weighted = np.where(rho.data > 0, rho.data * logs, 0.0)
    return float(np.sum(weighted)) * rho.grid.cell_volume


def rate_budget_increment(rho: PeriodicField, rate: PeriodicField, dt: float) -> float:
    """dt·∫ρΛ"""
    return dt * float(np.sum(rho.data * rate.data)) * rho.grid.cell_volume


def within_budget(rho_logw: float, budget: float, tolerance: float = BUDGET_TOLERANCE) -> bool:
    return rho_logw <= budget * (1.0 + tolerance) + 1e-12
