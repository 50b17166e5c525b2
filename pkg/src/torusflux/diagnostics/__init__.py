"""Runtime monitors and structural functionals"""
from .records import DiagnosticsRecord, RECORD_COLUMNS, RECORD_SCHEMA_VERSION, read_records, read_stride, write_records
from .energy import energy, kinetic_energy, potential_energy
from .flux import FluxHistory, effective_viscous_flux, velocity_potential
from .weight import WeightRates, decay_rate, initial_weight, rho_log_weight, weight_evolve
from .compactness import (
    KernelSpec,
    defect_table,
    kernel_l1_norm,
    kernel_l1_quadrature,
    kernel_table,
    kolmogorov_functional,
    oscillation_defect,
    smoothed_modulus,
    smoothed_sign,
)
from .bogovskii import BogovskiiRecord, ExponentTable, bogovskii_alpha, bogovskii_monitor, exponent_table
from .monitor import MonitorSuite

__all__ = [
    "DiagnosticsRecord",
    "RECORD_COLUMNS",
    "RECORD_SCHEMA_VERSION",
    "read_records",
    "read_stride",
    "write_records",
    "energy",
    "kinetic_energy",
    "potential_energy",
    "FluxHistory",
    "effective_viscous_flux",
    "velocity_potential",
    "WeightRates",
    "decay_rate",
    "initial_weight",
    "rho_log_weight",
    "weight_evolve",
    "KernelSpec",
    "defect_table",
    "kernel_l1_norm",
    "kernel_l1_quadrature",
    "kernel_table",
    "kolmogorov_functional",
    "oscillation_defect",
    "smoothed_modulus",
    "smoothed_sign",
    "BogovskiiRecord",
    "ExponentTable",
    "bogovskii_alpha",
    "bogovskii_monitor",
    "exponent_table",
    "MonitorSuite",
]
