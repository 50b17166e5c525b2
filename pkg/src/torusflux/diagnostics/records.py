"""Diagnostics records and their CSV form

One row per sampled time. The column list is versioned; the first line of
a monitors file is a `# schema_version=N` comment, optionally followed by
`stride=K`, the number of steps between records.
"""
import csv
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

logger = logging.getLogger(__name__)

RECORD_SCHEMA_VERSION = 1
SCHEMA_PREFIX = "# schema_version="
NOT_AVAILABLE = ""
STRIDE_KEY = "stride"


@dataclass
class DiagnosticsRecord:
    """Scalar monitors at one sample time

    Attributes:
        t: Time
        step: Step index
        mass: ∫ρ
        energy: E(t) = ∫(½|u|² + Π_μ(ρ))
        enstrophy_integral: Cumulative ∫∫|∇u|²
        damping_integral: Cumulative potential removed by the damping term
        evf_l2: ‖G‖₂ of the effective viscous flux
        evf_residual_l2: ‖∂t(-Δ)^{-1}div u + G - ⟨G⟩‖₂, None before two steps
        u_l2w12: Cumulative ‖u‖ in L²_t W^{1,2}_x
        pressure_lp1: ‖π_μ(ρ)‖ in L^{p1}_x at time t
        pressure_lp2: Cumulative ‖π_μ(ρ)‖ in L^{p2}_{t,x}
        damping_ls: Cumulative ‖ρ^m π_μ'(ρ)‖ in L^s_{t,x}
        weight_min: min w, None when the weight is disabled
        weight_max: max w
        rho_logw_integral: ∫ρ|log w|
        rho_lambda_budget: ∫ρ₀|log w₀| plus cumulative ∫∫ρΛ
        energy_defect: E(t) + enstrophy + damping - E(0)
        picard_iterations: Iterations of the step that produced this state
        min_rho: min ρ
    """

    t: float
    step: int
    mass: float
    energy: float
    enstrophy_integral: float = 0.0
    damping_integral: float = 0.0
    evf_l2: float = 0.0
    evf_residual_l2: Optional[float] = None
    u_l2w12: float = 0.0
    pressure_lp1: float = 0.0
    pressure_lp2: float = 0.0
    damping_ls: float = 0.0
    weight_min: Optional[float] = None
    weight_max: Optional[float] = None
    rho_logw_integral: Optional[float] = None
    rho_lambda_budget: Optional[float] = None
    energy_defect: float = 0.0
    picard_iterations: int = 0
    min_rho: float = 0.0

    @property
    def balance(self) -> float:
        """E(t) plus the cumulative dissipation terms"""
        return self.energy + self.enstrophy_integral + self.damping_integral

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_row(self) -> List[str]:
        return [_format(getattr(self, name)) for name in RECORD_COLUMNS]

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "DiagnosticsRecord":
        values: Dict[str, Any] = {}
        for f in fields(cls):
            text = row.get(f.name, NOT_AVAILABLE)
            if text == NOT_AVAILABLE:
                values[f.name] = None
            elif f.name in ("step", "picard_iterations"):
                values[f.name] = int(text)
            else:
                values[f.name] = float(text)
        return cls(**values)


RECORD_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def _format(value: Any) -> str:
    if value is None:
        return NOT_AVAILABLE
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_records(
    path: Union[str, Path], records: Sequence[DiagnosticsRecord], stride: Optional[int] = None
) -> Path:
    """Write records as a versioned CSV file (header only when empty)

    Args:
        path: Output file
        records: Records in time order
        stride: Steps between records, noted on the schema line when given
    """
    path = Path(path)
    schema = f"{SCHEMA_PREFIX}{RECORD_SCHEMA_VERSION}"
    if stride is not None:
        schema += f" {STRIDE_KEY}={int(stride)}"
    with path.open("w", newline="") as handle:
        handle.write(schema + "\n")
        writer = csv.writer(handle)
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            writer.writerow(record.to_row())
    return path


def read_records(path: Union[str, Path]) -> List[DiagnosticsRecord]:
    """Read a monitors file written by write_records

    Returns:
        Records, or an empty list if the file is missing
    """
    path = Path(path)
    if not path.exists():
        return []
    with path.open(newline="") as handle:
        first = handle.readline()
        if first.startswith(SCHEMA_PREFIX):
            version = int(first[len(SCHEMA_PREFIX):].split()[0])
            if version != RECORD_SCHEMA_VERSION:
                logger.warning("%s has schema version %d, expected %d", path, version, RECORD_SCHEMA_VERSION)
        else:
            handle.seek(0)
        return [DiagnosticsRecord.from_row(row) for row in csv.DictReader(handle)]


def read_stride(path: Union[str, Path]) -> Optional[int]:
    """Stride noted on the schema line of a monitors file, or None"""
    path = Path(path)
    if not path.exists():
        return None
    with path.open() as handle:
        first = handle.readline()
    if not first.startswith(SCHEMA_PREFIX):
        return None
    for token in first.split()[1:]:
        key, _, value = token.partition("=")
        if key == STRIDE_KEY:
            return int(value)
    return None
