"""Sweep orchestration and convergence tables

Runs the cross product of the sweep axes in a process pool, persists each
run under <out>/runs/<run_id>/ and assembles a ConvergenceReport purely
from what was persisted, so a report rebuilt later from the output
directory is identical to the one produced by the sweep.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from torusflux.core.config import AXES, Config, SweepConfig
from torusflux.core.errors import DomainError, TorusfluxError
from torusflux.core.state import STATUS_FAILED, RunMetadata, RunStore
from torusflux.diagnostics.bogovskii import bogovskii_monitor, exponent_table
from torusflux.diagnostics.compactness import defect_table, kernel_table
from torusflux.diagnostics.monitor import MonitorSuite
from torusflux.diagnostics.records import DiagnosticsRecord, read_records, write_records
from torusflux.fields.grid import PeriodicField, TorusGrid
from torusflux.harness.report import emit_report
from torusflux.laws import law_from_dict
from torusflux.scheme.initial import build_initial_state
from torusflux.scheme.params import SchemeParams, SchemeState
from torusflux.scheme.runner import run

logger = logging.getLogger(__name__)

Sample = Tuple[float, PeriodicField]

MONITORS_FILE = "monitors.csv"
SERIES_KINDS = ("rho", "u", "w")
# axes whose limit is approached by increasing the value
INCREASING_AXES = ("n_per_axis",)


@dataclass
class RunJob:
    """One point of the sweep, picklable for the worker pool"""

    run_id: str
    config: Dict[str, Any]
    axis_values: Dict[str, float]
    out_dir: str


@dataclass
class PairwiseRow:
    """Difference between consecutive runs along one axis

    Attributes:
        axis: Axis that varies
        fixed: Values of the other axes, "name=value" joined by commas
        run_a, run_b: Run ids, b closer to the limit
        value_a, value_b: Axis values
        rho_l1: ‖ρ_a - ρ_b‖₁ on the coarser grid
        u_l2: ‖u_a - u_b‖₂ on the coarser grid
        order: Observed order against the previous pair (3+ points only)
    """

    axis: str
    fixed: str
    run_a: str
    run_b: str
    value_a: float
    value_b: float
    rho_l1: float
    u_l2: float
    order: Optional[float] = None


@dataclass
class ConvergenceReport:
    """Everything the report files are written from

    Attributes:
        runs: Run metadata, sorted by run id
        records: Monitor records per run id
        axes: Sweep axis names in document order
        pairwise: Consecutive differences along each axis
        kernel_rows: {"run_id", "h", "samples", "sample_dt", "value"} rows of the
            translation functional over each run's stored series
        defect_rows: {"axis", "fixed", "k", "samples", "sample_dt", "value"} rows of
            the oscillation defect
    """

    runs: List[RunMetadata] = field(default_factory=list)
    records: Dict[str, List[DiagnosticsRecord]] = field(default_factory=dict)
    axes: List[str] = field(default_factory=list)
    pairwise: List[PairwiseRow] = field(default_factory=list)
    kernel_rows: List[Dict[str, Any]] = field(default_factory=list)
    defect_rows: List[Dict[str, Any]] = field(default_factory=list)

    def run(self, run_id: str) -> Optional[RunMetadata]:
        for metadata in self.runs:
            if metadata.run_id == run_id:
                return metadata
        return None


def run_id_for(index: int) -> str:
    return f"run_{index:03d}"


def plan_runs(config: SweepConfig, out_dir: Union[str, Path]) -> List[RunJob]:
    """One job per point of the axis cross product (a single job without axes)"""
    jobs = []
    for index, point in enumerate(config.points()):
        jobs.append(
            RunJob(
                run_id=run_id_for(index),
                config=config.run_config(point),
                axis_values={name: float(value) for name, value in point.items()},
                out_dir=str(out_dir),
            )
        )
    return jobs


def _scalars(config: Dict[str, Any]) -> Dict[str, Any]:
    scheme = config["scheme"]
    law = config["law"]
    return {
        "dim": config["grid"]["dim"],
        "n_per_axis": config["grid"]["n_per_axis"],
        "length": config["grid"]["length"],
        "law": law["kind"],
        "gamma": law["gamma"],
        "Gamma": law["Gamma"],
        "mu": law["mu"],
        "epsilon": scheme["epsilon"],
        "velocity_epsilon": scheme["velocity_epsilon"],
        "delta": scheme["delta"],
        "m": scheme["m"],
        "dt": scheme["dt"],
        "t_end": scheme["t_end"],
        "stride": config["diagnostics"]["stride"],
    }


def _save_fields(store: RunStore, metadata: RunMetadata, state: SchemeState, weight: Optional[PeriodicField], t: Optional[float]) -> None:
    store.save_snapshot(metadata, "rho", state.rho, t)
    store.save_snapshot(metadata, "u", state.u, t)
    if weight is not None:
        store.save_snapshot(metadata, "w", weight, t)


def _summary(records: Sequence[DiagnosticsRecord], suite: MonitorSuite) -> Dict[str, Any]:
    if not records:
        return {}
    first, last = records[0], records[-1]
    residuals = [r.evf_residual_l2 for r in records if r.evf_residual_l2 is not None]
    summary = {
        "mass_initial": first.mass,
        "mass_final": last.mass,
        "mass_loss": first.mass - last.mass,
        "energy_initial": first.energy,
        "energy_final": last.energy,
        "energy_violation": suite.max_violation,
        "evf_residual_l2": residuals[-1] if residuals else None,
        "min_rho": min(r.min_rho for r in records),
        "picard_max_iterations": max(r.picard_iterations for r in records),
        "weight_min": last.weight_min,
        "rho_logw_integral": last.rho_logw_integral,
        "rho_lambda_budget": last.rho_lambda_budget,
    }
    if suite.bogovskii is not None:
        summary["bogovskii"] = suite.bogovskii.to_dict()
    return summary


class SeriesRecorder:
    """Monitor that stores ρ, u and the weight every `stride` steps

    Must follow the MonitorSuite in the monitor list so that the stored
    weight is the one the suite has just advanced.
    """

    def __init__(self, store: RunStore, metadata: RunMetadata, suite: MonitorSuite):
        self.store = store
        self.metadata = metadata
        self.suite = suite

    def start(self, state: SchemeState) -> None:
        self._save(state)

    def observe(self, state: SchemeState) -> None:
        if state.step % self.suite.stride == 0:
            self._save(state)

    def finish(self, state: SchemeState) -> None:
        return None

    def _save(self, state: SchemeState) -> None:
        self.store.save_series(self.metadata, "rho", state.rho, state.step, state.t)
        self.store.save_series(self.metadata, "u", state.u, state.step, state.t)
        if self.suite.weight is not None:
            self.store.save_series(self.metadata, "w", self.suite.weight, state.step, state.t)


def execute_run(job: RunJob) -> RunMetadata:
    """Run one sweep point and persist it

    Scheme errors end the run as partial; invalid setups mark it failed.
    """
    store = RunStore(job.out_dir)
    metadata = RunMetadata(run_id=job.run_id, axis_values=job.axis_values, scalars=_scalars(job.config))
    run_dir = store.create_run(metadata)
    Config.from_dict(job.config).save(run_dir)

    try:
        initial = build_initial_state(job.config)
        exponent_table(initial.law.Gamma, m=initial.params.m)
    except TorusfluxError as e:
        logger.warning("run %s could not start: %s", job.run_id, e)
        metadata.status = STATUS_FAILED
        metadata.error = str(e)
        store.save_metadata(metadata)
        return metadata

    suite = MonitorSuite(job.config["diagnostics"])
    outputs = job.config["outputs"]

    def on_snapshot(state: SchemeState, t: float) -> None:
        _save_fields(store, metadata, state, suite.weight, t)

    monitors: List[Any] = [suite]
    if outputs.get("series", True):
        monitors.append(SeriesRecorder(store, metadata, suite))
    trajectory = run(initial, monitors, outputs.get("snapshot_times") or (), on_snapshot)
    records = [r for r in trajectory.records if isinstance(r, DiagnosticsRecord)]
    write_records(run_dir / MONITORS_FILE, records, stride=suite.stride)
    if outputs.get("final_snapshot", True):
        _save_fields(store, metadata, trajectory.final, suite.weight, None)

    metadata.status = trajectory.status
    metadata.error = trajectory.error
    metadata.steps = trajectory.steps
    metadata.t_final = float(trajectory.final.t)
    metadata.summary = _summary(records, suite)
    store.save_metadata(metadata)
    logger.info("run %s %s after %d steps", job.run_id, metadata.status, metadata.steps)
    return metadata


def _failed(job: RunJob, error: BaseException) -> RunMetadata:
    store = RunStore(job.out_dir)
    metadata = store.load_metadata(job.run_id) or RunMetadata(run_id=job.run_id, axis_values=job.axis_values)
    metadata.status = STATUS_FAILED
    metadata.error = f"{type(error).__name__}: {error}"
    store.run_dir(job.run_id).mkdir(parents=True, exist_ok=True)
    store.save_metadata(metadata)
    return metadata


def run_sweep(
    config: SweepConfig,
    out_dir: Optional[Union[str, Path]] = None,
    workers: Optional[int] = None,
    force: bool = False,
) -> ConvergenceReport:
    """Execute every sweep point and write the report files

    Args:
        config: Parsed sweep
        out_dir: Output directory (outputs.dir if None)
        workers: Worker processes (sweep.workers if None)
        force: Replace results already in out_dir

    Returns:
        The assembled report

    Raises:
        OutputExistsError: out_dir holds results and force is not set
    """
    out = Path(out_dir or config.outputs["dir"]).expanduser()
    store = RunStore(out)
    store.prepare(force)
    Config.from_dict(config.to_dict()).save(out)

    jobs = plan_runs(config, out)
    workers = max(1, int(workers or config.workers))
    logger.info("sweep of %d runs with %d workers into %s", len(jobs), workers, out)
    if workers == 1 or len(jobs) == 1:
        for job in jobs:
            try:
                execute_run(job)
            except Exception as e:
                logger.warning("run %s failed: %s", job.run_id, e)
                _failed(job, e)
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            futures = {pool.submit(execute_run, job): job for job in jobs}
            for future in as_completed(futures):
                job = futures[future]
                try:
                    future.result()
                except Exception as e:
                    logger.warning("run %s failed: %s", job.run_id, e)
                    _failed(job, e)

    report = load_report(out)
    outputs = config.outputs
    emit_report(report, out, csv_files=outputs.get("csv", True), markdown=outputs.get("markdown", True))
    return report


def restrict(f: PeriodicField, grid: TorusGrid) -> PeriodicField:
    """Cell-average restriction to a coarser grid of the same period

    Each coarse value averages the fine samples within half a coarse cell,
    the two samples on the cell boundary weighted by one half. Constants
    are preserved and so is the discrete integral.

    Raises:
        DomainError: grid is not a coarsening of f.grid by a power of two
    """
    fine = f.grid
    if grid == fine:
        return f
    if grid.dim != fine.dim or grid.length != fine.length or fine.n_per_axis % grid.n_per_axis:
        raise DomainError(f"cannot restrict a {fine.shape} field to {grid.shape}")
    ratio = fine.n_per_axis // grid.n_per_axis
    half = ratio // 2
    values = f.values
    for axis in grid.spatial_axes:
        total = np.zeros_like(values)
        for shift in range(-half, half + 1):
            weight = 0.5 if abs(shift) == half else 1.0
            total = total + weight * np.roll(values, -shift, axis=axis)
        values = np.take(total / ratio, np.arange(0, fine.n_per_axis, ratio), axis=axis)
    return PeriodicField(grid, values, f.nonnegative)


def _coarsest(a: TorusGrid, b: TorusGrid) -> TorusGrid:
    return a if a.n_per_axis <= b.n_per_axis else b


def field_distance(a: PeriodicField, b: PeriodicField, p: float) -> float:
    """‖a - b‖_p after restricting both to the coarser grid"""
    grid = _coarsest(a.grid, b.grid)
    return (restrict(a, grid) - restrict(b, grid)).lp_norm(p)


def _run_config(store: RunStore, run_id: str) -> Dict[str, Any]:
    path = store.run_dir(run_id) / Config.RESOLVED_FILE
    try:
        return yaml.safe_load(path.read_text()) or {}
    except (yaml.YAMLError, IOError):
        logger.warning("missing resolved config for run %s", run_id)
        return {}


def _final_fields(store: RunStore, metadata: RunMetadata, length: float) -> Dict[str, PeriodicField]:
    fields = {}
    for entry in metadata.snapshots:
        if entry.get("t") is None:
            kind = entry["kind"]
            fields[kind] = store.load_snapshot(metadata.run_id, entry["file"], length, nonnegative=kind != "u")
    return fields


def _series_fields(store: RunStore, metadata: RunMetadata, length: float) -> Dict[str, List[Sample]]:
    series = {}
    for kind in SERIES_KINDS:
        entries = metadata.series_of(kind)
        if entries:
            series[kind] = [
                (float(e["t"]), store.load_snapshot(metadata.run_id, e["file"], length, nonnegative=kind != "u"))
                for e in entries
            ]
    return series


def _sample_dt(metadata: RunMetadata) -> float:
    """Time weight dt·stride of one stored sample"""
    return float(metadata.scalars.get("dt") or 1.0) * int(metadata.scalars.get("stride") or 1)


def _group_along(runs: List[RunMetadata], axis: str, axes: List[str]) -> Dict[Tuple, List[RunMetadata]]:
    groups: Dict[Tuple, List[RunMetadata]] = {}
    for metadata in runs:
        if axis not in metadata.axis_values:
            continue
        key = tuple((name, metadata.axis_values.get(name)) for name in axes if name != axis)
        groups.setdefault(key, []).append(metadata)
    increasing = axis in INCREASING_AXES
    for members in groups.values():
        members.sort(key=lambda m: m.axis_values[axis], reverse=not increasing)
    return groups


def _fixed_label(key: Tuple) -> str:
    return ",".join(f"{name}={value!r}" for name, value in key)


def _step(axis: str, a: float, b: float) -> float:
    if axis in INCREASING_AXES:
        return abs(1.0 / a - 1.0 / b)
    return abs(a - b)


def _with_orders(rows: List[PairwiseRow], axis: str) -> None:
    if len(rows) < 2:
        return
    for previous, row in zip(rows, rows[1:]):
        before = _step(axis, previous.value_a, previous.value_b)
        after = _step(axis, row.value_a, row.value_b)
        if previous.rho_l1 > 0 and row.rho_l1 > 0 and before > 0 and after > 0 and before != after:
            row.order = math.log(previous.rho_l1 / row.rho_l1) / math.log(before / after)


def _aligned(samples: List[Sample], times: Sequence[float]) -> List[PeriodicField]:
    """Sample nearest in time to each entry of times"""
    stamps = np.array([t for t, _ in samples])
    return [samples[int(np.argmin(np.abs(stamps - t)))][1] for t in times]


def _recompute_bogovskii(metadata: RunMetadata, config: Dict[str, Any], finals: Dict[str, PeriodicField]) -> None:
    if "rho" not in finals or "u" not in finals or not config:
        return
    alpha = config.get("diagnostics", {}).get("bogovskii", {}).get("alpha")
    try:
        record = bogovskii_monitor(finals["rho"], finals["u"], law_from_dict(config["law"]), alpha)
    except TorusfluxError as e:
        logger.warning("run %s: pressure integrability not recomputed: %s", metadata.run_id, e)
        return
    metadata.summary = {**metadata.summary, "bogovskii": record.to_dict()}


def _replayed_records(
    metadata: RunMetadata,
    config: Dict[str, Any],
    series: Dict[str, List[Sample]],
    finals: Dict[str, PeriodicField],
) -> List[DiagnosticsRecord]:
    rho, u = series.get("rho", []), series.get("u", [])
    if not rho or len(u) != len(rho) or not config:
        return []
    try:
        law = law_from_dict(config["law"])
        params = SchemeParams.from_config(config["scheme"])
        steps = [entry["step"] for entry in metadata.series_of("rho")]
        states = [
            SchemeState(t=t, rho=r, u=v, params=params, law=law, step=step)
            for (t, r), (_, v), step in zip(rho, u, steps)
        ]
        w = series.get("w", [])
        weights = [f for _, f in w] if len(w) == len(rho) else None
        if "rho" in finals and "u" in finals and metadata.steps > steps[-1]:
            states.append(SchemeState(metadata.t_final, finals["rho"], finals["u"], params, law, metadata.steps))
            if weights is not None:
                weights = weights + [finals["w"]] if "w" in finals else None
        return MonitorSuite(config.get("diagnostics")).replay(states, weights)
    except TorusfluxError as e:
        logger.warning("run %s: records not recomputed: %s", metadata.run_id, e)
        return []


def assemble_report(store: RunStore, recompute: bool = False) -> ConvergenceReport:
    """Build the report from the persisted runs

    Time-integrated functionals are taken over the stored series with
    weight dt·stride. The pressure pairing is recomputed from the final
    snapshots, and monitor records are recomputed from the series when a
    run's monitors file is missing or `recompute` is set.

    Args:
        store: Run store of the sweep's output directory
        recompute: Rebuild every run's records from its snapshots
    """
    runs = store.load_all()
    report = ConvergenceReport(runs=runs)
    for metadata in runs:
        for name in metadata.axis_values:
            if name in AXES and name not in report.axes:
                report.axes.append(name)

    finals: Dict[str, Dict[str, PeriodicField]] = {}
    series: Dict[str, Dict[str, List[Sample]]] = {}
    configs: Dict[str, Dict[str, Any]] = {}
    for metadata in runs:
        run_id = metadata.run_id
        configs[run_id] = _run_config(store, run_id)
        length = metadata.scalars.get("length", 2.0 * math.pi)
        finals[run_id] = _final_fields(store, metadata, length)
        series[run_id] = _series_fields(store, metadata, length)
        _recompute_bogovskii(metadata, configs[run_id], finals[run_id])
        path = store.run_dir(run_id) / MONITORS_FILE
        if recompute or not path.exists():
            logger.info("recomputing records of run %s from its snapshots", run_id)
            report.records[run_id] = _replayed_records(metadata, configs[run_id], series[run_id], finals[run_id])
        else:
            report.records[run_id] = read_records(path)

    for metadata in runs:
        samples = series[metadata.run_id]
        diagnostics = configs[metadata.run_id].get("diagnostics")
        if "rho" not in samples or not diagnostics:
            continue
        kernel = diagnostics["kernel"]
        rho = [f for _, f in samples["rho"]]
        w = [f for _, f in samples.get("w", [])]
        weight = w if kernel.get("weighted", True) and len(w) == len(rho) else None
        sample_dt = _sample_dt(metadata)
        for row in kernel_table(
            rho,
            kernel["h_list"],
            weight_snapshots=weight,
            sigma=kernel.get("sigma"),
            p=kernel.get("p", 1.0),
            normalized=kernel.get("normalized", True),
            dt=sample_dt,
        ):
            report.kernel_rows.append({"run_id": metadata.run_id, "samples": len(rho), "sample_dt": sample_dt, **row})

    for axis in report.axes:
        for key, group in _group_along(runs, axis, report.axes).items():
            members = [m for m in group if "rho" in finals[m.run_id] and "u" in finals[m.run_id]]
            if len(members) >= 2:
                rows = []
                for a, b in zip(members, members[1:]):
                    fa, fb = finals[a.run_id], finals[b.run_id]
                    rows.append(
                        PairwiseRow(
                            axis=axis,
                            fixed=_fixed_label(key),
                            run_a=a.run_id,
                            run_b=b.run_id,
                            value_a=a.axis_values[axis],
                            value_b=b.axis_values[axis],
                            rho_l1=field_distance(fa["rho"], fb["rho"], 1.0),
                            u_l2=field_distance(fa["u"], fb["u"], 2.0),
                        )
                    )
                if len(rows) >= 2:
                    _with_orders(rows, axis)
                report.pairwise.extend(rows)

            chained = [m for m in group if "rho" in series[m.run_id]]
            if len(chained) >= 2:
                report.defect_rows.extend(_defect_rows(axis, key, chained, series, configs))
    return report


def _defect_rows(
    axis: str,
    key: Tuple,
    members: List[RunMetadata],
    series: Dict[str, Dict[str, List[Sample]]],
    configs: Dict[str, Dict[str, Any]],
) -> List[Dict[str, Any]]:
    # members are compared at the limit's sample times over the common time range
    limit = members[-1]
    settings = configs[limit.run_id].get("diagnostics", {}).get("defect", {})
    chains = [series[m.run_id]["rho"] for m in members]
    sample_dt = _sample_dt(limit)
    end = min(chain[-1][0] for chain in chains)
    times = [t for t, _ in chains[-1] if t <= end + 0.5 * sample_dt]
    grid = chains[0][0][1].grid
    for chain in chains:
        grid = _coarsest(grid, chain[0][1].grid)
    aligned = [[restrict(f, grid) for f in _aligned(chain, times)] for chain in chains]
    rows = defect_table(
        aligned[:-1],
        aligned[-1],
        settings.get("alpha", 2.0),
        settings.get("k_list", (1, 2, 4, 8, 16)),
        dt=sample_dt,
    )
    fixed = _fixed_label(key)
    return [{"axis": axis, "fixed": fixed, "samples": len(times), "sample_dt": sample_dt, **row} for row in rows]


def load_report(out_dir: Union[str, Path], recompute: bool = False) -> ConvergenceReport:
    """Rebuild the report of a finished sweep from its output directory"""
    return assemble_report(RunStore(out_dir), recompute)
