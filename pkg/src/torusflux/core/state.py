"""Run persistence for torusflux

Each run owns <out>/runs/<run_id>/ holding a trajectory.json sidecar and
its field snapshots in the TFLX format.
"""
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from torusflux.core.errors import OutputExistsError
from torusflux.fields.grid import PeriodicField
from torusflux.fields.io import dump_field, load_field

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

STATUS_COMPLETE = "complete"
STATUS_PARTIAL = "partial"
STATUS_FAILED = "failed"


@dataclass
class RunMetadata:
    """Contents of trajectory.json

    Attributes:
        run_id: Directory name of the run
        axis_values: Sweep axis values of this run
        scalars: Resolved scalar parameters (epsilon, delta, dt, ...)
        status: complete, partial or failed
        error: Message of the error that stopped the run
        steps: Time steps taken
        t_final: Time reached
        snapshots: Index of {"kind", "t", "file"} entries
        summary: Final scalar diagnostics
    """

    run_id: str
    axis_values: Dict[str, float] = field(default_factory=dict)
    scalars: Dict[str, Any] = field(default_factory=dict)
    status: str = STATUS_PARTIAL
    error: Optional[str] = None
    steps: int = 0
    t_final: float = 0.0
    snapshots: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return {
            "schema_version": SCHEMA_VERSION,
            "run_id": self.run_id,
            "axis_values": self.axis_values,
            "scalars": self.scalars,
            "status": self.status,
            "error": self.error,
            "steps": self.steps,
            "t_final": self.t_final,
            "snapshots": self.snapshots,
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunMetadata":
        """Create from dictionary, tolerating missing fields"""
        return cls(
            run_id=data.get("run_id", ""),
            axis_values=data.get("axis_values", {}),
            scalars=data.get("scalars", {}),
            status=data.get("status", STATUS_PARTIAL),
            error=data.get("error"),
            steps=data.get("steps", 0),
            t_final=data.get("t_final", 0.0),
            snapshots=data.get("snapshots", []),
            summary=data.get("summary", {}),
        )

    def snapshots_of(self, kind: str) -> List[Dict[str, Any]]:
        return [s for s in self.snapshots if s.get("kind") == kind and "step" not in s]

    def series_of(self, kind: str) -> List[Dict[str, Any]]:
        """Time-series entries of one field, in step order"""
        series = [s for s in self.snapshots if s.get("kind") == kind and "step" in s]
        return sorted(series, key=lambda s: s["step"])


class RunStore:
    """Manages run directories under one output directory"""

    RUNS_DIR = "runs"
    METADATA_FILE = "trajectory.json"

    def __init__(self, out_dir: Union[str, Path]):
        """Initialize run store

        Args:
            out_dir: Output directory of a run or sweep
        """
        self.out_dir = Path(out_dir).expanduser()
        self.runs_dir = self.out_dir / self.RUNS_DIR

    def prepare(self, force: bool = False) -> None:
        """Create the output directory

        Raises:
            OutputExistsError: Directory already holds results and force is not set
        """
        if self.out_dir.exists() and any(self.out_dir.iterdir()):
            if not force:
                raise OutputExistsError(str(self.out_dir))
            logger.warning("overwriting results in %s", self.out_dir)
            if self.runs_dir.exists():
                shutil.rmtree(self.runs_dir)
        self.runs_dir.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def create_run(self, metadata: RunMetadata) -> Path:
        path = self.run_dir(metadata.run_id)
        path.mkdir(parents=True, exist_ok=True)
        self.save_metadata(metadata)
        return path

    def save_metadata(self, metadata: RunMetadata) -> None:
        path = self.run_dir(metadata.run_id) / self.METADATA_FILE
        path.write_text(json.dumps(metadata.to_dict(), indent=2))

    def load_metadata(self, run_id: str) -> Optional[RunMetadata]:
        """Load a run's sidecar

        Returns:
            RunMetadata, or None if missing or unreadable
        """
        path = self.run_dir(run_id) / self.METADATA_FILE
        if path.exists():
            try:
                return RunMetadata.from_dict(json.loads(path.read_text()))
            except (json.JSONDecodeError, IOError):
                logger.warning("unreadable run metadata: %s", path)
        return None

    def list_runs(self) -> List[str]:
        if not self.runs_dir.exists():
            return []
        return sorted(p.name for p in self.runs_dir.iterdir() if (p / self.METADATA_FILE).exists())

    def load_all(self) -> List[RunMetadata]:
        runs = [self.load_metadata(run_id) for run_id in self.list_runs()]
        return [r for r in runs if r is not None]

    @staticmethod
    def snapshot_name(kind: str, t: Optional[float]) -> str:
        if t is None:
            return f"final_{kind}.tflx"
        return f"{kind}_t{t:.6f}.tflx"

    def save_snapshot(
        self, metadata: RunMetadata, kind: str, f: PeriodicField, t: Optional[float] = None
    ) -> str:
        """Write a field snapshot and index it in the metadata

        Args:
            metadata: Run metadata to update (saved by the caller)
            kind: Field name (rho, u, w)
            f: Field to write
            t: Snapshot time, or None for the final snapshot
        """
        name = self.snapshot_name(kind, t)
        dump_field(self.run_dir(metadata.run_id) / name, f)
        metadata.snapshots = [s for s in metadata.snapshots if s.get("file") != name]
        metadata.snapshots.append({"kind": kind, "t": t, "file": name})
        return name

    def load_snapshot(self, run_id: str, name: str, length: float, nonnegative: bool = False) -> PeriodicField:
        return load_field(self.run_dir(run_id) / name, length=length, nonnegative=nonnegative)

    @staticmethod
    def series_name(kind: str, step: int) -> str:
        return f"{kind}_s{step:06d}.tflx"

    def save_series(self, metadata: RunMetadata, kind: str, f: PeriodicField, step: int, t: float) -> str:
        """Write one time-series sample and index it in the metadata

        Args:
            metadata: Run metadata to update (saved by the caller)
            kind: Field name (rho, u, w)
            f: Field to write
            step: Step index of the sample
            t: Time of the sample
        """
        name = self.series_name(kind, step)
        dump_field(self.run_dir(metadata.run_id) / name, f)
        metadata.snapshots = [s for s in metadata.snapshots if s.get("file") != name]
        metadata.snapshots.append({"kind": kind, "t": float(t), "step": int(step), "file": name})
        return name
