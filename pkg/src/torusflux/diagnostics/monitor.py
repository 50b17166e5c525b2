"""Runtime monitor suite

Cumulative quantities (enstrophy, damping, space-time norms, weight and
its budget) are updated after every step; a DiagnosticsRecord is emitted
at step 0, every `stride` steps and at the final state.
"""
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from torusflux.core.config import Config
from torusflux.core.errors import DomainError
from torusflux.diagnostics.bogovskii import (
    BogovskiiRecord,
    ExponentTable,
    bogovskii_monitor,
    exponent_table,
)
from torusflux.diagnostics.energy import damping_power, dirichlet_integral, energy, power_integral
from torusflux.diagnostics.flux import FluxHistory, effective_viscous_flux
from torusflux.diagnostics.records import DiagnosticsRecord
from torusflux.diagnostics.weight import (
    WeightRates,
    advect,
    decay,
    decay_rate,
    initial_weight,
    rate_budget_increment,
    rho_log_weight,
    within_budget,
)
from torusflux.fields.filters import mollify
from torusflux.fields.grid import PeriodicField
from torusflux.scheme.params import SchemeState

logger = logging.getLogger(__name__)

RecordSink = Callable[[DiagnosticsRecord], None]


class MonitorSuite:
    """Every runtime diagnostic behind the run() monitor hooks

    Attributes:
        records: Records emitted so far
        weight: Current weight field (None when disabled)
        violations: Relative energy violations between consecutive records
    """

    def __init__(
        self,
        diagnostics: Optional[Dict[str, Any]] = None,
        stride: Optional[int] = None,
        sink: Optional[RecordSink] = None,
    ):
        """Initialize the suite

        Args:
            diagnostics: The `diagnostics` config section (defaults if None)
            stride: Steps between records (overrides the config)
            sink: Called with each record as it is emitted
        """
        self.settings = diagnostics or Config.DEFAULT_CONFIG["diagnostics"]
        self.stride = int(stride or self.settings["stride"])
        if self.stride < 1:
            raise DomainError(f"stride must be at least 1, got {self.stride}")
        self.sink = sink
        self.energy_tolerance = float(self.settings.get("energy_tolerance", 1e-3))
        weight = self.settings["weight"]
        self.weight_enabled = bool(weight["enabled"])
        self.rates = WeightRates.from_config(weight)
        self.bogovskii_alpha = self.settings.get("bogovskii", {}).get("alpha")

        self.records: List[DiagnosticsRecord] = []
        self.violations: List[float] = []
        self.weight: Optional[PeriodicField] = None
        self.bogovskii: Optional[BogovskiiRecord] = None
        self.exponents: Optional[ExponentTable] = None
        self._history = FluxHistory()
        self._reset_totals()

    def _reset_totals(self) -> None:
        self.energy0 = 0.0
        self.enstrophy = 0.0
        self.damping = 0.0
        self.u_l2_time = 0.0
        self.pressure_p2_time = 0.0
        self.damping_s_time = 0.0
        self.budget = 0.0
        self._residual: Optional[float] = None
        self._last_step = -1

    def start(self, state: SchemeState) -> Optional[DiagnosticsRecord]:
        self._reset_totals()
        self.records = []
        self.violations = []
        self._history = FluxHistory()
        self.exponents = None
        self.exponents = exponent_table(state.law.Gamma, m=state.params.m)
        self.energy0 = energy(state)
        G = effective_viscous_flux(state)
        self._residual = self._history.update(state, G)
        if self.weight_enabled:
            weight = self.settings["weight"]
            self.weight = initial_weight(state.rho, weight["initial"], weight.get("cap"))
            self.budget = rho_log_weight(state.rho, self.weight)
        return self._emit(state, G)

    def observe(self, state: SchemeState) -> Optional[DiagnosticsRecord]:
        G = self._accumulate(state)
        if state.step % self.stride == 0:
            return self._emit(state, G)
        return None

    def finish(self, state: SchemeState) -> Optional[DiagnosticsRecord]:
        if self.exponents is None:
            return None
        self.bogovskii = bogovskii_monitor(state.rho, state.u, state.law, self.bogovskii_alpha)
        if self._last_step == state.step:
            return None
        G = effective_viscous_flux(state)
        return self._emit(state, G)

    def _accumulate(self, state: SchemeState) -> PeriodicField:
        report = state.report
        dt = report.dt if report is not None else state.params.dt
        if report is not None:
            self.enstrophy += report.dissipation
            self.damping += report.damping_energy
        self._accumulate_norms(state, dt)
        G = effective_viscous_flux(state)
        self._residual = self._history.update(state, G)
        if self.weight_enabled:
            rate = decay_rate(state.u, G, self.rates, state.rho, state.law.gamma)
            velocity = mollify(state.u, state.params.velocity_mollifier)
            self.weight = decay(advect(self.weight, velocity, dt), rate, dt)
            self.budget += rate_budget_increment(state.rho, rate, dt)
        return G

    def _accumulate_norms(self, state: SchemeState, dt: float) -> None:
        cell = state.grid.cell_volume
        pressure = state.law.pressure(state.rho.data)
        self.u_l2_time += dt * state.u.l2_norm() ** 2
        self.pressure_p2_time += dt * power_integral(pressure, self.exponents.p2, cell)
        damping_flux = state.rho.data ** state.params.m * state.law.pressure(state.rho.data, 1)
        self.damping_s_time += dt * power_integral(damping_flux, self.exponents.s, cell)

    def replay(
        self,
        states: Sequence[SchemeState],
        weights: Optional[Sequence[PeriodicField]] = None,
    ) -> List[DiagnosticsRecord]:
        """Rebuild the records of a trajectory from stored samples

        Integrals the runtime suite takes step by step become right-endpoint
        sums over the sample spacing, and the weight is read from `weights`
        instead of being evolved. Pointwise columns (mass, energy, EVF,
        pressure L^p1, weight bounds) are exact.

        Args:
            states: Samples in time order
            weights: Stored weight of each sample, or None

        Returns:
            One record per sample

        Raises:
            ExponentError: Exponent relations fail for the samples' Γ and m
        """
        self._reset_totals()
        self.records = []
        self.violations = []
        self._history = FluxHistory()
        self.weight = None
        self.exponents = None
        if not states:
            return []
        if weights is not None and len(weights) != len(states):
            raise DomainError(f"{len(weights)} weight samples for {len(states)} states")

        first = states[0]
        self.exponents = exponent_table(first.law.Gamma, m=first.params.m)
        self.energy0 = energy(first)
        previous_t = first.t
        for i, state in enumerate(states):
            span = state.t - previous_t
            G = effective_viscous_flux(state)
            if i > 0:
                self.enstrophy += span * dirichlet_integral(state.u)
                self.damping += span * damping_power(state)
                self._accumulate_norms(state, span)
            self._residual = self._history.update(state, G)
            if weights is not None:
                self.weight = weights[i]
                if i == 0:
                    self.budget = rho_log_weight(state.rho, self.weight)
                else:
                    rate = decay_rate(state.u, G, self.rates, state.rho, state.law.gamma)
                    self.budget += rate_budget_increment(state.rho, rate, span)
            self._emit(state, G)
            previous_t = state.t

        last = states[-1]
        self.bogovskii = bogovskii_monitor(last.rho, last.u, last.law, self.bogovskii_alpha)
        return list(self.records)

    def _emit(self, state: SchemeState, G: PeriodicField) -> DiagnosticsRecord:
        cell = state.grid.cell_volume
        pressure = state.law.pressure(state.rho.data)
        record = DiagnosticsRecord(
            t=float(state.t),
            step=int(state.step),
            mass=state.rho.integral(),
            energy=energy(state),
            enstrophy_integral=self.enstrophy,
            damping_integral=self.damping,
            evf_l2=G.l2_norm(),
            evf_residual_l2=self._residual,
            u_l2w12=float(np.sqrt(self.u_l2_time + self.enstrophy)),
            pressure_lp1=power_integral(pressure, self.exponents.p1, cell) ** (1.0 / self.exponents.p1),
            pressure_lp2=self.pressure_p2_time ** (1.0 / self.exponents.p2),
            damping_ls=self.damping_s_time ** (1.0 / self.exponents.s),
            picard_iterations=state.report.iterations if state.report is not None else 0,
            min_rho=float(state.rho.data.min()),
        )
        record.energy_defect = record.balance - self.energy0
        if self.weight is not None:
            record.weight_min = float(self.weight.data.min())
            record.weight_max = float(self.weight.data.max())
            record.rho_logw_integral = rho_log_weight(state.rho, self.weight)
            record.rho_lambda_budget = self.budget
            if not within_budget(record.rho_logw_integral, self.budget):
                logger.warning(
                    "t = %.6g: ∫ρ|log w| = %.6g exceeds the rate budget %.6g",
                    state.t,
                    record.rho_logw_integral,
                    self.budget,
                )
        self._check_energy(record)
        self.records.append(record)
        self._last_step = state.step
        if self.sink is not None:
            self.sink(record)
        return record

    def _check_energy(self, record: DiagnosticsRecord) -> None:
        if not self.records:
            return
        previous = self.records[-1]
        scale = max(abs(previous.balance), 1e-12)
        violation = (record.balance - previous.balance) / scale
        self.violations.append(violation)
        if violation > self.energy_tolerance:
            logger.warning(
                "t = %.6g: energy balance grew by %.3e relative (tolerance %.1e)",
                record.t,
                violation,
                self.energy_tolerance,
            )

    @property
    def max_violation(self) -> float:
        """Largest relative growth of the energy balance between records (0 if none)"""
        return max([0.0] + self.violations)
