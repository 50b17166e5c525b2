"""Sweep orchestration and reporting"""
from .sweep import (
    ConvergenceReport,
    PairwiseRow,
    RunJob,
    assemble_report,
    execute_run,
    field_distance,
    load_report,
    plan_runs,
    restrict,
    run_sweep,
)
from .report import emit_report
from .template import TemplateRenderer

__all__ = [
    "ConvergenceReport",
    "PairwiseRow",
    "RunJob",
    "assemble_report",
    "execute_run",
    "field_distance",
    "load_report",
    "plan_runs",
    "restrict",
    "run_sweep",
    "emit_report",
    "TemplateRenderer",
]
