"""Effective viscous flux G = div u - [π_μ(ρ)]_ε and its evolution identity

The velocity potential φ = (-Δ)^{-1}div u satisfies ∂t φ = -(G - ⟨G⟩).
FluxHistory keeps the previous φ so the identity residual can be
measured with a backward difference.
"""
import logging
from dataclasses import dataclass
from typing import Optional

from torusflux.diagnostics.energy import pressure_field
from torusflux.fields.filters import mollify
from torusflux.fields.grid import PeriodicField
from torusflux.fields.spectral import div, inv_laplacian
from torusflux.scheme.params import SchemeState

logger = logging.getLogger(__name__)


def effective_viscous_flux(state: SchemeState) -> PeriodicField:
    """G = div u - [π_μ(ρ)]_ε with the pressure mollifier of the scheme"""
    return div(state.u) - mollify(pressure_field(state), state.params.pressure_mollifier)


def velocity_potential(u: PeriodicField) -> PeriodicField:
    """(-Δ)^{-1}div u"""
    return inv_laplacian(div(u), zero_mean=True)


@dataclass
class FluxHistory:
    """Last stored velocity potential"""

    t: Optional[float] = None
    potential: Optional[PeriodicField] = None

    def update(self, state: SchemeState, G: PeriodicField) -> Optional[float]:
        """Store the potential of state.u and return the identity residual

        Returns:
            ‖(φ - φ_prev)/(t - t_prev) + G - ⟨G⟩‖₂, or None without a
            previous step
        """
        potential = velocity_potential(state.u)
        residual = None
        if self.potential is not None and self.t is not None and state.t > self.t:
            rate = (potential - self.potential) * (1.0 / (state.t - self.t))
            centered = G - G.mean()
            residual = (rate + centered).l2_norm()
        self.t = state.t
        self.potential = potential
        return residual
