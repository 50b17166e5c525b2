"""Tests for the regularized scheme: substeps, Picard coupling and the runner"""
import math

import numpy as np
import pytest

from torusflux.core.config import Config, merge_config
from torusflux.core.errors import CFLViolation, DomainError, PicardNonConvergence
from torusflux.fields import MollifierSpec, PeriodicField, TorusGrid
from torusflux.laws import IsentropicLaw
from torusflux.scheme import (
    SchemeParams,
    SchemeState,
    build_initial_state,
    check_cfl,
    continuity_step,
    damping_step,
    momentum_step,
    picard_coupled_step,
    run,
    transport_step,
)


def make_config(**sections):
    """Default configuration with section overrides"""
    return merge_config(Config.DEFAULT_CONFIG, sections)


def make_state(grid, rho_fn, u_fn=None, **params):
    """State from sample functions with the given scheme parameters"""
    rho = PeriodicField.from_function(grid, rho_fn, nonnegative=True)
    if u_fn is None:
        u = PeriodicField(grid, np.zeros((grid.dim,) + grid.shape))
    else:
        u = PeriodicField.from_function(grid, u_fn)
    return SchemeState(t=0.0, rho=rho, u=u, params=SchemeParams(**params), law=IsentropicLaw(gamma=2.0))


class MassRecorder:
    """Monitor that keeps the mass of every state"""

    def __init__(self):
        self.masses = []

    def start(self, state):
        self.masses.append(state.rho.integral())

    def observe(self, state):
        self.masses.append(state.rho.integral())

    def finish(self, state):
        return None


def test_params_validation():
    """Test rejection of invalid scheme parameters"""
    with pytest.raises(DomainError):
        SchemeParams(epsilon=0.0)
    with pytest.raises(DomainError):
        SchemeParams(delta=0.1, m=1.0)
    with pytest.raises(DomainError):
        SchemeParams(relaxation=1.5)
    with pytest.raises(DomainError):
        SchemeParams(pressure_stage="start")


def test_params_round_trip():
    """Test SchemeParams.from_config against to_dict"""
    params = SchemeParams(epsilon=0.3, delta=0.01, dt=2e-3, velocity_epsilon=0.4)

    assert SchemeParams.from_config(params.to_dict()) == params
    assert params.velocity_mollifier.epsilon == 0.4
    assert params.with_dt(1e-3).dt == 1e-3


def test_damping_exact_solution():
    """Test ρ(1) = 1/2 for ρ' = -ρ², ρ(0) = 1"""
    grid = TorusGrid(1, 8)
    rho = PeriodicField.constant(grid, 1.0)

    damped = damping_step(rho, delta=1.0, m=2.0, dt=1.0)

    np.testing.assert_allclose(damped.data, 0.5, rtol=1e-12)


def test_damping_linear_case():
    """Test the exponential solution for m = 1"""
    grid = TorusGrid(1, 8)
    rho = PeriodicField.constant(grid, 2.0)

    damped = damping_step(rho, delta=0.5, m=1.0, dt=2.0)

    np.testing.assert_allclose(damped.data, 2.0 * math.exp(-1.0), rtol=1e-12)
    assert damping_step(rho, 0.0, 2.0, 1.0) is rho


def test_damping_keeps_zero_density():
    """Test that vacuum stays vacuum"""
    grid = TorusGrid(1, 8)
    rho = PeriodicField.scalar(grid, np.array([0.0, 1.0] * 4), nonnegative=True)

    damped = damping_step(rho, 1.0, 11.5, 0.1)

    assert damped.data[0] == 0.0
    assert 0.0 < damped.data[1] < 1.0


def test_transport_conserves_mass_and_sign():
    """Test conservation and positivity of the upwind update"""
    grid = TorusGrid(2, 32)
    rng = np.random.default_rng(1)
    rho = PeriodicField.scalar(grid, 0.1 + rng.random(grid.shape), nonnegative=True)
    v = PeriodicField.from_function(grid, lambda x, y: (np.sin(x + y), np.cos(2 * x)))
    dt = 0.5 * grid.spacing

    transported = transport_step(rho, v, dt)

    assert transported.integral() == pytest.approx(rho.integral(), rel=1e-12)
    assert transported.data.min() >= 0.0


def test_transport_translation_order():
    """Test first-order convergence of upwind translation at speed 0.5"""
    errors = []
    for n in (64, 128):
        grid = TorusGrid(1, n)
        rho = PeriodicField.from_function(grid, lambda x: 1.0 + 0.5 * np.sin(x), nonnegative=True)
        v = PeriodicField.constant(grid, [0.5])
        dt = math.pi / n
        for _ in range(n):
            rho = transport_step(rho, v, dt)
        # n steps of π/n move the profile by π/2
        exact = 1.0 + 0.5 * np.sin(grid.coordinates() - 0.5 * math.pi)
        errors.append(PeriodicField.scalar(grid, rho.data - exact).l1_norm())

    order = math.log2(errors[0] / errors[1])
    assert order >= 0.9


def test_cfl_violation_suggests_step():
    """Test that the CFL error carries the admissible step"""
    grid = TorusGrid(1, 64)
    v = PeriodicField.constant(grid, [2.0])

    with pytest.raises(CFLViolation) as exc:
        check_cfl(v, grid.spacing)

    assert exc.value.suggested_dt == pytest.approx(0.25 * grid.spacing)
    check_cfl(v, 0.25 * grid.spacing)


def test_continuity_step_damps_mass():
    """Test that transport plus damping removes mass"""
    grid = TorusGrid(1, 64)
    rho = PeriodicField.from_function(grid, lambda x: 1.0 + 0.5 * np.sin(x), nonnegative=True)
    v = PeriodicField.constant(grid, [0.3])

    updated = continuity_step(rho, v, delta=0.1, m=3.0, dt=0.01)

    assert updated.integral() < rho.integral()


def test_momentum_heat_decay():
    """Test that zero forcing reduces the momentum step to the heat flow"""
    grid = TorusGrid(1, 64)
    u = PeriodicField.from_function(grid, np.sin)
    pressure = PeriodicField.constant(grid, 3.0)

    evolved = momentum_step(PeriodicField(grid, u.values), pressure, MollifierSpec(0.2), 1.0)

    expected = math.exp(-1.0) * np.sin(grid.coordinates())
    assert np.abs(evolved.values[0] - expected).max() <= 1e-10 * math.exp(-1.0)


def test_momentum_manufactured_solution():
    """Test first-order convergence to u = e^{-2t} sin x

    The pressure -e^{-2t}cos x / κ̂(1) makes its mollified gradient equal
    to e^{-2t} sin x, which drives exactly this solution.
    """
    grid = TorusGrid(1, 64)
    spec = MollifierSpec(0.4)
    kappa = float(spec.transform(grid).flat[1])
    x = grid.coordinates()
    errors = []
    for steps in (25, 50):
        dt = 0.5 / steps
        u = PeriodicField(grid, np.sin(x)[np.newaxis])
        for n in range(steps):
            t = n * dt
            pressure = PeriodicField.scalar(grid, -math.exp(-2.0 * t) * np.cos(x) / kappa)
            u = momentum_step(u, pressure, spec, dt)
        exact = math.exp(-1.0) * np.sin(x)
        errors.append(np.abs(u.values[0] - exact).max())

    assert errors[0] / errors[1] == pytest.approx(2.0, abs=0.15)


def test_momentum_source_term():
    """Test that an explicit source enters as dt·source before the heat flow"""
    grid = TorusGrid(1, 16)
    u = PeriodicField(grid, np.zeros((1, 16)))
    source = PeriodicField(grid, np.ones((1, 16)))
    pressure = PeriodicField.constant(grid, 1.0)

    evolved = momentum_step(u, pressure, MollifierSpec(1.0), 0.1, source=source)

    np.testing.assert_allclose(evolved.values, 0.1, rtol=1e-12)


def test_constant_state_is_steady():
    """Test that uniform density at rest does not move"""
    grid = TorusGrid(2, 16)
    state = make_state(grid, lambda x, y: np.full_like(x, 1.3), epsilon=1.0, dt=0.01)

    advanced = picard_coupled_step(state)

    np.testing.assert_allclose(advanced.rho.data, 1.3, rtol=1e-14)
    assert np.abs(advanced.u.values).max() < 1e-13
    assert advanced.report.iterations <= 2
    assert advanced.step == 1
    assert advanced.t == pytest.approx(0.01)


def test_picard_step_conserves_mass():
    """Test mass conservation and convergence of the coupled step"""
    grid = TorusGrid(1, 64)
    state = make_state(grid, lambda x: 1.0 + 0.5 * np.sin(x), epsilon=0.2, dt=1e-3)

    advanced = picard_coupled_step(state)

    assert advanced.rho.integral() == pytest.approx(state.rho.integral(), rel=1e-13)
    assert advanced.report.residuals[-1] <= state.params.picard_tol
    assert advanced.report.dissipation >= 0.0
    assert advanced.report.damping_mass == 0.0


def test_picard_step_with_damping():
    """Test the damping bookkeeping of the coupled step"""
    grid = TorusGrid(1, 64)
    state = make_state(grid, lambda x: 1.0 + 0.5 * np.sin(x), epsilon=0.2, dt=1e-3, delta=0.1, m=11.5)

    advanced = picard_coupled_step(state)

    lost = state.rho.integral() - advanced.rho.integral()
    assert advanced.report.damping_mass == pytest.approx(lost, rel=1e-9)
    assert advanced.report.damping_energy > 0.0


def test_picard_midpoint_stage():
    """Test that the midpoint variant converges and conserves mass"""
    grid = TorusGrid(1, 64)
    state = make_state(
        grid, lambda x: 1.0 + 0.5 * np.sin(x), epsilon=0.2, dt=1e-3, pressure_stage="midpoint", relaxation=0.9
    )

    advanced = picard_coupled_step(state)

    assert advanced.rho.integral() == pytest.approx(state.rho.integral(), rel=1e-13)
    assert advanced.report.iterations > 1


def test_picard_residuals_decrease_within_step():
    """Test that successive Picard residuals never grow"""
    grid = TorusGrid(1, 64)
    state = make_state(
        grid,
        lambda x: 1.0 + 0.5 * np.sin(x),
        lambda x: (0.2 * np.sin(x),),
        epsilon=0.2,
        dt=1e-3,
        pressure_stage="midpoint",
        relaxation=0.9,
        picard_tol=1e-12,
    )

    residuals = picard_coupled_step(state).report.residuals

    assert len(residuals) >= 3
    assert all(b <= a for a, b in zip(residuals, residuals[1:]))


def test_picard_non_convergence():
    """Test the iteration cap"""
    grid = TorusGrid(1, 64)
    state = make_state(grid, lambda x: 1.0 + 0.5 * np.sin(x), epsilon=0.2, dt=1e-3, picard_max=1, picard_tol=1e-14)

    with pytest.raises(PicardNonConvergence) as exc:
        picard_coupled_step(state)

    assert exc.value.iterations == 1
    assert exc.value.last_residual > 1e-14


def test_build_initial_state_defaults():
    """Test the default initial state"""
    state = build_initial_state(Config.DEFAULT_CONFIG)

    assert state.t == 0.0
    assert state.grid == TorusGrid(1, 64)
    assert state.params.m == pytest.approx(11.5)
    assert state.params.velocity_mollifier.epsilon == state.params.epsilon
    assert state.rho.data.min() >= 0.1
    assert state.rho.integral() == pytest.approx(2.0 * math.pi, rel=1e-12)
    assert np.abs(state.u.values).max() == 0.0


@pytest.mark.parametrize("recipe", ["constant", "sine", "gaussian", "random"])
def test_density_recipes(recipe):
    """Test that each recipe is bounded by its clamp"""
    config = make_config(
        grid={"dim": 2, "n_per_axis": 32},
        scheme={"epsilon": 0.5},
        initial={"rho": {"recipe": recipe, "rho_min": 0.2, "rho_max": 1.4}},
    )

    state = build_initial_state(config)

    assert state.rho.data.min() >= 0.2 - 1e-12
    assert state.rho.data.max() <= 1.4 + 1e-12


def test_random_recipe_is_seeded():
    """Test that the seed fixes the random recipe"""
    config = make_config(initial={"rho": {"recipe": "random"}, "u": {"recipe": "random", "amplitude": 0.2}}, seed=7)

    first = build_initial_state(config)
    second = build_initial_state(config)

    np.testing.assert_array_equal(first.rho.values, second.rho.values)
    np.testing.assert_array_equal(first.u.values, second.u.values)
    assert np.abs(first.u.values[0]).max() == pytest.approx(0.2)


def test_initial_density_bounds_checked():
    """Test the rho_min/rho_max requirement"""
    config = make_config(initial={"rho": {"rho_min": 0.0}})

    with pytest.raises(DomainError):
        build_initial_state(config)


def test_run_lands_on_horizon():
    """Test that the last step is shortened to reach t_end exactly"""
    config = make_config(scheme={"dt": 0.003, "t_end": 0.01})
    recorder = MassRecorder()

    trajectory = run(build_initial_state(config), [recorder])

    assert trajectory.complete
    assert trajectory.final.t == 0.01
    assert trajectory.steps == 4
    assert trajectory.final.report.dt == pytest.approx(0.001)
    assert len(recorder.masses) == 5


def test_run_zero_horizon():
    """Test that t_end = 0 returns the initial state untouched"""
    config = make_config(scheme={"dt": 1e-3, "t_end": 0.0})
    initial = build_initial_state(config)

    trajectory = run(initial)

    assert trajectory.final is initial
    assert trajectory.steps == 0
    assert trajectory.records == []


def test_run_snapshots():
    """Test that snapshot callbacks fire at the first state past each time"""
    config = make_config(scheme={"dt": 0.002, "t_end": 0.01})
    seen = []

    run(build_initial_state(config), snapshot_times=[0.0, 0.005], on_snapshot=lambda s, t: seen.append((t, s.step)))

    assert seen == [(0.0, 0), (0.005, 3)]


def test_run_partial_on_cfl_violation():
    """Test that a scheme error ends the run with a partial trajectory"""
    config = make_config(
        initial={"u": {"recipe": "constant", "amplitude": 10.0}},
        scheme={"dt": 0.05, "t_end": 0.5},
    )

    trajectory = run(build_initial_state(config))

    assert not trajectory.complete
    assert trajectory.status == "partial"
    assert "CFL" in trajectory.error
    assert trajectory.steps == 0


def test_time_step_self_convergence():
    """Test first-order self-convergence of the density under dt halving"""
    finals = []
    for dt in (2e-3, 1e-3, 5e-4):
        config = make_config(
            initial={"u": {"recipe": "sine", "amplitude": 0.2}},
            scheme={"dt": dt, "t_end": 0.1},
        )
        trajectory = run(build_initial_state(config))
        assert trajectory.complete, trajectory.error
        finals.append(trajectory.final.rho)

    coarse = (finals[0] - finals[1]).lp_norm(1.0)
    fine = (finals[1] - finals[2]).lp_norm(1.0)
    assert fine > 0.0
    assert math.log2(coarse / fine) >= 0.9
