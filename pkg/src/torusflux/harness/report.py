"""Report files of a sweep

    sweep_summary.csv     one row per run
    monitors_<run>.csv    the run's diagnostics records
    kernel_table.csv      translation functional per run and h
    defect_table.csv      oscillation defect per axis group and k
    pairwise_table.csv    consecutive differences and observed orders
    report.md             rendered summary

CSV floats are written with repr, so files rebuilt from the same runs
are byte-identical.
"""
import csv
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Sequence, Union

from torusflux.diagnostics.records import write_records
from torusflux.harness.template import TemplateRenderer

if TYPE_CHECKING:
    from torusflux.harness.sweep import ConvergenceReport

logger = logging.getLogger(__name__)

SUMMARY_FILE = "sweep_summary.csv"
KERNEL_FILE = "kernel_table.csv"
DEFECT_FILE = "defect_table.csv"
PAIRWISE_FILE = "pairwise_table.csv"
MARKDOWN_FILE = "report.md"

SUMMARY_COLUMNS = (
    "status",
    "steps",
    "t_final",
    "mass_initial",
    "mass_final",
    "mass_loss",
    "energy_initial",
    "energy_final",
    "energy_violation",
    "evf_residual_l2",
    "min_rho",
    "picard_max_iterations",
    "weight_min",
    "rho_logw_integral",
    "rho_lambda_budget",
    "bogovskii_alpha",
    "bogovskii_pressure_pairing",
    "bogovskii_rho_power_integral",
    "error",
)
KERNEL_COLUMNS = ("run_id", "h", "samples", "sample_dt", "value")
DEFECT_COLUMNS = ("axis", "fixed", "k", "samples", "sample_dt", "value")
PAIRWISE_COLUMNS = ("axis", "fixed", "run_a", "run_b", "value_a", "value_b", "rho_l1", "u_l2", "order")

def monitors_file(run_id: str) -> str:
    return f"monitors_{run_id}.csv"

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)

def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> Path:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])
    return path

def summary_rows(report: "ConvergenceReport") -> List[Dict[str, Any]]:
    rows = []
    for metadata in report.runs:
        summary = metadata.summary
        bogovskii = summary.get("bogovskii") or {}
        row: Dict[str, Any] = {"run_id": metadata.run_id}
        for axis in report.axes:
            row[axis] = metadata.axis_values.get(axis)
        row.update(
            status=metadata.status,
            steps=metadata.steps,
            t_final=metadata.t_final,
            bogovskii_alpha=bogovskii.get("alpha"),
            bogovskii_pressure_pairing=bogovskii.get("pressure_pairing"),
            bogovskii_rho_power_integral=bogovskii.get("rho_power_integral"),
            error=metadata.error,
        )
        for column in SUMMARY_COLUMNS:
            if column not in row:
                row[column] = summary.get(column)
        rows.append(row)
    return rows

def _context(report: "ConvergenceReport") -> Dict[str, Any]:
    rows = summary_rows(report)
    stride = report.runs[0].scalars.get("stride") if report.runs else None
    bogovskii = [
        {"run_id": m.run_id, **m.summary["bogovskii"]} for m in report.runs if m.summary.get("bogovskii")
    ]
    return {
        "runs": report.runs,
        "axes": report.axes,
        "stride": stride,
        "summary": rows,
        "failures": [m for m in report.runs if m.error],
        "pairwise": [vars(row) for row in report.pairwise],
        "bogovskii": bogovskii,
        "kernel": report.kernel_rows,
        "defect": report.defect_rows,
    }

def emit_report(
    report: "ConvergenceReport",
    out_dir: Union[str, Path],
    csv_files: bool = True,
    markdown: bool = True,
) -> List[Path]:
    """Write the report files into out_dir

    Returns:
        Paths written, in a fixed order
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    if csv_files:
        columns = ("run_id",) + tuple(report.axes) + SUMMARY_COLUMNS
        written.append(_write_csv(out / SUMMARY_FILE, columns, summary_rows(report)))
        for metadata in report.runs:
            records = report.records.get(metadata.run_id, [])
            stride = metadata.scalars.get("stride")
            written.append(write_records(out / monitors_file(metadata.run_id), records, stride=stride))
        written.append(_write_csv(out / KERNEL_FILE, KERNEL_COLUMNS, report.kernel_rows))
        written.append(_write_csv(out / DEFECT_FILE, DEFECT_COLUMNS, report.defect_rows))
        written.append(_write_csv(out / PAIRWISE_FILE, PAIRWISE_COLUMNS, [vars(r) for r in report.pairwise]))
    if markdown:
        path = out / MARKDOWN_FILE
        path.write_text(TemplateRenderer().render_report(_context(report)))
        written.append(path)
    logger.debug("wrote %d report files to %s", len(written), out)
    return written
