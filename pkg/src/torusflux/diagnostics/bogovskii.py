"""Pressure integrability monitor and the exponent relations

Testing the momentum equation with ∇ψ, Δψ = ρ^α - ⟨ρ^α⟩, controls
∫π_μ(ρ)ρ^α. The monitor reports that integral, ∫ρ^{Γ+α} and the pairings
that appear in the estimate at a single time slice.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from torusflux.core.config import m_from_Gamma
from torusflux.core.errors import DomainError, ExponentError
from torusflux.fields.grid import PeriodicField
from torusflux.fields.spectral import div, grad, gradient_tensor, hessian, inv_laplacian
from torusflux.laws.base import PressureLaw

logger = logging.getLogger(__name__)

# Γ above which the exponent relations are claimed
GAMMA_THRESHOLD = 3.0


def bogovskii_alpha(Gamma: float) -> float:
    """α = 13/20 Γ - 1/20"""
    return 13.0 / 20.0 * Gamma - 1.0 / 20.0


@dataclass(frozen=True)
class ExponentTable:
    Gamma: float
    m: float
    p1: float
    p2: float
    s: float
    alpha: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def exponent_table(Gamma: float, m: Optional[float] = None) -> ExponentTable:
    """Damping exponent and the integrability exponents it yields

    p1 = (m-1)/Γ, p2 = 2(m-1)/Γ, s = 2(m-1)/(m+Γ-1), α = 13/20 Γ - 1/20

    Args:
        Gamma: Regularizing exponent Γ
        m: Damping exponent (5/2 Γ + 3/2 if None)

    Raises:
        ExponentError: p1 <= 5/2, p2 <= 5 or s <= 10/7
    """
    if not Gamma > 0:
        raise DomainError(f"Gamma must be positive, got {Gamma}")
    if Gamma <= GAMMA_THRESHOLD:
        logger.warning("Gamma = %g is at or below %g; the exponent relations are only claimed above it", Gamma, GAMMA_THRESHOLD)
    m = m_from_Gamma(Gamma) if m is None else float(m)
    p1 = (m - 1.0) / Gamma
    p2 = 2.0 * (m - 1.0) / Gamma
    s = 2.0 * (m - 1.0) / (m + Gamma - 1.0)
    failed = []
    if not p1 > 2.5:
        failed.append(f"p1 = {p1:.6g} <= 5/2")
    if not p2 > 5.0:
        failed.append(f"p2 = {p2:.6g} <= 5")
    if not s > 10.0 / 7.0:
        failed.append(f"s = {s:.6g} <= 10/7")
    if failed:
        raise ExponentError(f"exponent relations fail for Gamma = {Gamma}, m = {m}: {'; '.join(failed)}")
    return ExponentTable(Gamma=float(Gamma), m=m, p1=p1, p2=p2, s=s, alpha=bogovskii_alpha(Gamma))


@dataclass(frozen=True)
class BogovskiiRecord:
    """One time slice of the monitor

    Attributes:
        alpha: Exponent α
        pressure_pairing: ∫π_μ(ρ)ρ^α
        rho_power_integral: ∫ρ^{Γ+α}
        transport_pairing: ∫u·∇Δ^{-1}div(ρ^α u)
        viscous_pairing: ∫∇u : ∇²ψ
        psi_l2: ‖ψ‖₂
    """

    alpha: float
    pressure_pairing: float
    rho_power_integral: float
    transport_pairing: float
    viscous_pairing: float
    psi_l2: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def bogovskii_monitor(
    rho: PeriodicField, u: PeriodicField, law: PressureLaw, alpha: Optional[float] = None
) -> BogovskiiRecord:
    """Evaluate the monitor at one time

    Args:
        rho: Density
        u: Velocity
        law: Pressure law (Γ taken from it)
        alpha: Exponent (13/20 Γ - 1/20 if None)

    Raises:
        DomainError: alpha is not positive
    """
    alpha = bogovskii_alpha(law.Gamma) if alpha is None else float(alpha)
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    grid = rho.grid
    cell = grid.cell_volume
    power = rho.data ** alpha
    source = PeriodicField.scalar(grid, power - power.mean())
    psi = inv_laplacian(source, zero_mean=True) * -1.0

    jacobian = gradient_tensor(u)
    second = hessian(psi)
    # ∇u_{ab} = ∂_b u_a against the symmetric Hessian ∂_a∂_b ψ
    viscous = float(np.sum(jacobian * second)) * cell

    flux = PeriodicField(grid, u.values * power)
    chi = inv_laplacian(div(flux), zero_mean=True) * -1.0
    transport = float(np.sum(u.values * grad(chi).values)) * cell

    pressure = law.pressure(rho.data)
    return BogovskiiRecord(
        alpha=alpha,
        pressure_pairing=float(np.sum(pressure * power)) * cell,
        rho_power_integral=float(np.sum(rho.data ** (law.Gamma + alpha))) * cell,
        transport_pairing=transport,
        viscous_pairing=viscous,
        psi_l2=psi.l2_norm(),
    )
