"""Tests for run persistence"""
import json

import numpy as np
import pytest

from torusflux.core.errors import OutputExistsError
from torusflux.core.state import STATUS_COMPLETE, RunMetadata, RunStore
from torusflux.fields import PeriodicField, TorusGrid


@pytest.fixture
def store(tmp_path):
    """Prepared run store in a fresh output directory"""
    store = RunStore(tmp_path / "out")
    store.prepare()
    return store


@pytest.fixture
def metadata():
    """Metadata of a finished run"""
    return RunMetadata(
        run_id="run-000",
        axis_values={"epsilon": 0.2},
        scalars={"epsilon": 0.2, "dt": 0.001},
        status=STATUS_COMPLETE,
        steps=100,
        t_final=0.1,
        summary={"mass_loss": 0.0},
    )


def test_prepare_creates_runs_dir(store):
    """Test that prepare creates <out>/runs"""
    assert store.runs_dir.is_dir()
    assert store.list_runs() == []


def test_prepare_refuses_existing_results(store, metadata):
    """Test that results are only replaced with force"""
    store.create_run(metadata)
    (store.out_dir / "report.md").write_text("# old\n")

    with pytest.raises(OutputExistsError) as exc:
        store.prepare()

    assert "use --force" in str(exc.value)
    store.prepare(force=True)
    assert store.list_runs() == []
    assert (store.out_dir / "report.md").exists()


def test_metadata_round_trip(store, metadata):
    """Test trajectory.json write and read"""
    path = store.create_run(metadata)

    loaded = store.load_metadata("run-000")

    assert (path / "trajectory.json").exists()
    assert loaded == metadata
    assert json.loads((path / "trajectory.json").read_text())["schema_version"] == 1


def test_metadata_from_partial_dict():
    """Test defaults for missing fields"""
    loaded = RunMetadata.from_dict({"run_id": "run-007"})

    assert loaded.status == "partial"
    assert loaded.snapshots == []
    assert loaded.error is None


def test_unreadable_metadata(store, metadata):
    """Test that a corrupt sidecar reads as None and is skipped"""
    path = store.create_run(metadata)
    (path / "trajectory.json").write_text("{not json")

    assert store.load_metadata("run-000") is None
    assert store.load_metadata("run-999") is None
    assert store.load_all() == []


def test_runs_listed_sorted(store):
    """Test that runs are listed in name order"""
    for run_id in ("run-002", "run-000", "run-001"):
        store.create_run(RunMetadata(run_id=run_id))
    (store.runs_dir / "stray").mkdir()

    assert store.list_runs() == ["run-000", "run-001", "run-002"]
    assert [m.run_id for m in store.load_all()] == ["run-000", "run-001", "run-002"]


def test_snapshot_names():
    """Test final and timed snapshot file names"""
    assert RunStore.snapshot_name("rho", None) == "final_rho.tflx"
    assert RunStore.snapshot_name("rho", 0.1) == "rho_t0.100000.tflx"


def test_snapshot_round_trip(store, metadata):
    """Test writing, indexing and reading a snapshot"""
    grid = TorusGrid(1, 32)
    rho = PeriodicField.from_function(grid, lambda x: 1.0 + 0.5 * np.cos(x), nonnegative=True)
    store.create_run(metadata)

    name = store.save_snapshot(metadata, "rho", rho)
    store.save_snapshot(metadata, "rho", rho)
    store.save_snapshot(metadata, "rho", rho, t=0.05)
    loaded = store.load_snapshot("run-000", name, length=grid.length, nonnegative=True)

    assert name == "final_rho.tflx"
    assert len(metadata.snapshots_of("rho")) == 2
    assert metadata.snapshots_of("u") == []
    assert loaded.nonnegative
    np.testing.assert_array_equal(loaded.values, rho.values)


def test_series_kept_apart_from_snapshots(store, metadata):
    """Test that series samples are indexed by step and not listed as snapshots"""
    grid = TorusGrid(1, 32)
    rho = PeriodicField.constant(grid, 1.0)
    store.create_run(metadata)
    store.save_snapshot(metadata, "rho", rho)

    store.save_series(metadata, "rho", rho, 10, 0.01)
    name = store.save_series(metadata, "rho", rho, 5, 0.005)
    store.save_series(metadata, "rho", rho, 5, 0.005)

    assert name == "rho_s000005.tflx"
    assert (store.run_dir("run-000") / name).exists()
    assert [e["step"] for e in metadata.series_of("rho")] == [5, 10]
    assert [e["t"] for e in metadata.series_of("rho")] == [0.005, 0.01]
    assert [e["file"] for e in metadata.snapshots_of("rho")] == ["final_rho.tflx"]
    assert metadata.series_of("u") == []
