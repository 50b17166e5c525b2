"""Scheme parameters and state"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

from torusflux.core.errors import DomainError
from torusflux.fields.filters import MollifierSpec
from torusflux.fields.grid import PeriodicField, TorusGrid
from torusflux.laws.base import PressureLaw

PRESSURE_STAGES = ("end", "midpoint")


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of the regularized scheme

    Attributes:
        epsilon: Mollification scale of the pressure
        delta: Damping weight δ of the δρ^m term
        m: Damping exponent (5/2 Γ + 3/2 unless overridden)
        dt: Time step
        t_end: Horizon
        picard_tol: Relative fixed-point tolerance
        picard_max: Iteration cap
        relaxation: Under-relaxation factor of the Picard update, in (0, 1]
        pressure_stage: "end" evaluates π_μ at the new density, "midpoint"
            at the average of old and new
        velocity_epsilon: Mollification scale of the transport velocity
            (defaults to epsilon)
    """

    epsilon: float = 0.2
    delta: float = 0.0
    m: float = 11.5
    dt: float = 1e-3
    t_end: float = 0.1
    picard_tol: float = 1e-10
    picard_max: int = 20
    relaxation: float = 1.0
    pressure_stage: str = "end"
    velocity_epsilon: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.delta < 0:
            raise DomainError(f"delta must be nonnegative, got {self.delta}")
        if self.delta > 0 and not self.m > 1:
            raise DomainError(f"damping exponent m must exceed 1, got {self.m}")
        if not self.dt > 0:
            raise DomainError(f"time step must be positive, got {self.dt}")
        if self.t_end < 0:
            raise DomainError(f"horizon must be nonnegative, got {self.t_end}")
        if self.picard_max < 1:
            raise DomainError(f"picard_max must be at least 1, got {self.picard_max}")
        if not 0 < self.relaxation <= 1:
            raise DomainError(f"relaxation must lie in (0, 1], got {self.relaxation}")
        if self.pressure_stage not in PRESSURE_STAGES:
            raise DomainError(f"pressure_stage must be one of {PRESSURE_STAGES}, got {self.pressure_stage!r}")
        if self.velocity_epsilon is not None and not self.velocity_epsilon > 0:
            raise DomainError(f"velocity_epsilon must be positive, got {self.velocity_epsilon}")

    @property
    def pressure_mollifier(self) -> MollifierSpec:
        return MollifierSpec(self.epsilon)

    @property
    def velocity_mollifier(self) -> MollifierSpec:
        return MollifierSpec(self.velocity_epsilon or self.epsilon)

    def with_dt(self, dt: float) -> "SchemeParams":
        return replace(self, dt=dt)

    @classmethod
    def from_config(cls, scheme: Dict[str, Any]) -> "SchemeParams":
        """Build from the resolved `scheme` config section"""
        return cls(
            epsilon=float(scheme["epsilon"]),
            delta=float(scheme["delta"]),
            m=float(scheme["m"]),
            dt=float(scheme["dt"]),
            t_end=float(scheme["t_end"]),
            picard_tol=float(scheme["picard_tol"]),
            picard_max=int(scheme["picard_max"]),
            relaxation=float(scheme["relaxation"]),
            pressure_stage=scheme["pressure_stage"],
            velocity_epsilon=scheme.get("velocity_epsilon"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "m": self.m,
            "dt": self.dt,
            "t_end": self.t_end,
            "picard_tol": self.picard_tol,
            "picard_max": self.picard_max,
            "relaxation": self.relaxation,
            "pressure_stage": self.pressure_stage,
            "velocity_epsilon": self.velocity_epsilon,
        }


@dataclass(frozen=True)
class StepReport:
    """What one coupled step did

    Attributes:
        dt: Step length
        iterations: Picard iterations used
        residuals: Relative residual after each iteration
        dissipation: Exact ∫∫|∇u|² of the diffusion substep
        damping_energy: ∫Π_μ dropped by the damping substep
        damping_mass: ∫ρ removed by the damping substep
    """

    dt: float
    iterations: int = 1
    residuals: List[float] = field(default_factory=list)
    dissipation: float = 0.0
    damping_energy: float = 0.0
    damping_mass: float = 0.0


@dataclass(frozen=True)
class SchemeState:
    """Density and velocity at time t

    Attributes:
        t: Time
        rho: Nonnegative scalar density
        u: Velocity with one component per dimension
        params: Scheme parameters
        law: Pressure law
        step: Steps taken since the initial state
        report: Report of the step that produced this state
    """

    t: float
    rho: PeriodicField
    u: PeriodicField
    params: SchemeParams
    law: PressureLaw
    step: int = 0
    report: Optional[StepReport] = None

    def __post_init__(self):
        if not self.rho.is_scalar or not self.rho.nonnegative:
            raise DomainError("density must be a scalar field flagged nonnegative")
        if self.u.grid != self.rho.grid or self.u.components != self.rho.grid.dim:
            raise DomainError("velocity must be a vector field on the density grid")

    @property
    def grid(self) -> TorusGrid:
        return self.rho.grid

    def advance(self, rho: PeriodicField, u: PeriodicField, report: StepReport) -> "SchemeState":
        return replace(self, t=self.t + report.dt, rho=rho, u=u, step=self.step + 1, report=report)
