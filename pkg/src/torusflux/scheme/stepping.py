"""Time stepping of the regularized system

    ∂t ρ + div(ρ[u]_ε) + δρ^m = 0
    ∂t u + ∇[π_μ(ρ)]_ε = Δu

Density: conservative first-order upwind transport, one sweep per axis,
then the damping ODE solved exactly. Velocity: explicit pressure source,
then the heat semigroup applied exactly in Fourier space. The two are
coupled by a Picard iteration on the transport velocity.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from torusflux.core.errors import CFLViolation, PicardNonConvergence
from torusflux.fields.filters import MollifierSpec, mollify
from torusflux.fields.grid import PeriodicField
from torusflux.fields.spectral import grad, heat_flow, to_spectral
from torusflux.laws.base import PressureLaw
from torusflux.scheme.params import SchemeState, StepReport

logger = logging.getLogger(__name__)

CFL_NUMBER = 0.5


def max_speed(v: PeriodicField) -> float:
    return float(np.abs(v.values).max())


def cfl_limit(v: PeriodicField) -> float:
    """Largest dt with dt·max|v| <= 0.5·spacing"""
    speed = max_speed(v)
    return np.inf if speed == 0 else CFL_NUMBER * v.grid.spacing / speed


def check_cfl(v: PeriodicField, dt: float) -> None:
    """Raises CFLViolation with the largest admissible dt"""
    limit = cfl_limit(v)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolation(dt, limit)


def transport_step(rho: PeriodicField, v: PeriodicField, dt: float) -> PeriodicField:
    """Upwind finite-volume update of ∂t ρ + div(ρv) = 0

    Face velocities average the two neighbouring cells. Each axis sweep
    telescopes, so the sum of ρ is conserved to rounding.
    """
    check_cfl(v, dt)
    grid = rho.grid
    ratio = dt / grid.spacing
    data = rho.data.copy()
    for axis in range(grid.dim):
        va = v.values[axis]
        face = 0.5 * (va + np.roll(va, -1, axis=axis))
        flux = np.maximum(face, 0.0) * data + np.minimum(face, 0.0) * np.roll(data, -1, axis=axis)
        data = data - ratio * (flux - np.roll(flux, 1, axis=axis))
    return PeriodicField.scalar(grid, data, nonnegative=True)


def damping_step(rho: PeriodicField, delta: float, m: float, dt: float) -> PeriodicField:
    """Exact solution of ρ' = -δρ^m after time dt, pointwise"""
    if delta == 0:
        return rho
    data = np.maximum(rho.data, 0.0)
    if m == 1:
        damped = data * np.exp(-delta * dt)
    else:
        damped = data * (1.0 + delta * (m - 1.0) * dt * data ** (m - 1.0)) ** (-1.0 / (m - 1.0))
    return PeriodicField.scalar(rho.grid, damped, nonnegative=True)


def continuity_step(
    rho: PeriodicField, v_mollified: PeriodicField, delta: float, m: float, dt: float
) -> PeriodicField:
    """Transport with the (already mollified) velocity, then damping

    Raises:
        CFLViolation: dt above 0.5·spacing/max|v|
    """
    return damping_step(transport_step(rho, v_mollified, dt), delta, m, dt)


def heat_dissipation(u_star: PeriodicField, dt: float, coeffs: Optional[np.ndarray] = None) -> float:
    """∫_0^dt ∫|∇u|² for the heat flow started at u_star (exact)"""
    grid = u_star.grid
    if coeffs is None:
        coeffs = to_spectral(u_star)
    decay = 1.0 - np.exp(-2.0 * grid.k_squared() * dt)
    total = float(np.sum(np.abs(coeffs) ** 2 * decay))
    return 0.5 * grid.volume / grid.size ** 2 * total


def momentum_step(
    u: PeriodicField,
    forcing_pressure: PeriodicField,
    spec: MollifierSpec,
    dt: float,
    source: Optional[PeriodicField] = None,
) -> PeriodicField:
    """u_new = e^{dtΔ}(u - dt∇[π]_ε + dt·source)"""
    return _momentum_with_dissipation(u, forcing_pressure, spec, dt, source)[0]


def _momentum_with_dissipation(
    u: PeriodicField,
    forcing_pressure: PeriodicField,
    spec: MollifierSpec,
    dt: float,
    source: Optional[PeriodicField] = None,
) -> Tuple[PeriodicField, float]:
    force = grad(mollify(forcing_pressure, spec))
    u_star = u.values - dt * force.values
    if source is not None:
        u_star = u_star + dt * source.values
    u_star = PeriodicField(u.grid, u_star)
    coeffs = to_spectral(u_star)
    u_new = heat_flow(u_star, dt, coeffs)
    return u_new, heat_dissipation(u_star, dt, coeffs)


def _relative_change(new: PeriodicField, old: PeriodicField) -> float:
    change = (new - old).l2_norm()
    scale = max(new.l2_norm(), old.l2_norm())
    if scale == 0.0:
        return 0.0
    return change / scale


def picard_coupled_step(state: SchemeState, dt: Optional[float] = None) -> SchemeState:
    """Advance one step by fixed-point iteration on the transport velocity

    Given the iterate ũ, transport ρ with [ũ]_ε over the step, then
    advance u with the pressure of the new density. The first iterate is
    the current velocity. With pressure_stage "midpoint" the transport
    velocity is [(u + ũ)/2]_ε and the pressure is taken at (ρ + ρ_new)/2.

    Raises:
        CFLViolation: Transport velocity too fast for dt
        PicardNonConvergence: Residual above picard_tol after picard_max iterations
    """
    params = state.params
    law: PressureLaw = state.law
    dt = params.dt if dt is None else dt
    midpoint = params.pressure_stage == "midpoint"
    velocity_spec = params.velocity_mollifier
    pressure_spec = params.pressure_mollifier
    rho_n, u_n = state.rho, state.u

    u_iter = u_n
    residuals = []
    for iteration in range(1, params.picard_max + 1):
        v_source = 0.5 * (u_n + u_iter) if midpoint else u_iter
        v = mollify(v_source, velocity_spec)
        rho_transported = transport_step(rho_n, v, dt)
        rho_new = damping_step(rho_transported, params.delta, params.m, dt)
        rho_p = PeriodicField.scalar(rho_n.grid, 0.5 * (rho_n.data + rho_new.data)) if midpoint else rho_new
        pressure = PeriodicField.scalar(rho_n.grid, law.pressure(np.maximum(rho_p.data, 0.0)))
        u_next, dissipation = _momentum_with_dissipation(u_n, pressure, pressure_spec, dt)
        if params.relaxation < 1.0:
            u_next = u_iter + params.relaxation * (u_next - u_iter)
        residual = _relative_change(u_next, u_iter)
        residuals.append(residual)
        u_iter = u_next
        if residual <= params.picard_tol:
            break
    else:
        raise PicardNonConvergence(params.picard_max, residuals[-1])

    logger.debug("step %d: %d Picard iterations, residuals %s", state.step + 1, iteration, residuals)
    damping_energy = 0.0
    damping_mass = 0.0
    if params.delta > 0:
        cell = rho_n.grid.cell_volume
        damping_energy = float(np.sum(law.potential(rho_transported.data) - law.potential(rho_new.data)) * cell)
        damping_mass = float(np.sum(rho_transported.data - rho_new.data) * cell)
    report = StepReport(
        dt=dt,
        iterations=iteration,
        residuals=residuals,
        dissipation=dissipation,
        damping_energy=damping_energy,
        damping_mass=damping_mass,
    )
    return state.advance(rho_new, u_iter, report)
