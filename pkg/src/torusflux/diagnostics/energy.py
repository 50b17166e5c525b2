"""Energy and uniform-estimate norms"""
import numpy as np

from torusflux.fields.grid import PeriodicField
from torusflux.fields.spectral import gradient_tensor
from torusflux.laws.base import PressureLaw
from torusflux.scheme.params import SchemeState


def kinetic_energy(u: PeriodicField) -> float:
    return 0.5 * u.l2_norm() ** 2


def potential_energy(rho: PeriodicField, law: PressureLaw) -> float:
    return float(np.sum(law.potential(rho.data))) * rho.grid.cell_volume


def energy(state: SchemeState) -> float:
    """E = ∫(½|u|² + Π_μ(ρ)) by trapezoidal quadrature"""
    return kinetic_energy(state.u) + potential_energy(state.rho, state.law)


def pressure_field(state: SchemeState) -> PeriodicField:
    """π_μ(ρ) on the grid"""
    return PeriodicField.scalar(state.grid, state.law.pressure(state.rho.data))


def power_integral(values: np.ndarray, p: float, cell_volume: float) -> float:
    """∫|f|^p for sampled f"""
    return float(np.sum(np.abs(values) ** p)) * cell_volume


def dirichlet_integral(u: PeriodicField) -> float:
    """∫|∇u|² (spectral gradient, rectangle rule)"""
    return float(np.sum(gradient_tensor(u) ** 2)) * u.grid.cell_volume


def damping_power(state: SchemeState) -> float:
    """Rate δ∫ρ^m Π_μ'(ρ) at which the damping removes potential energy"""
    params = state.params
    if params.delta == 0:
        return 0.0
    rho = state.rho.data
    rate = rho ** params.m * np.asarray(state.law.potential_derivative(rho, 1))
    return params.delta * float(np.sum(rate)) * state.grid.cell_volume
