"""Integration tests for the torusflux workflow

These tests verify end-to-end functionality: command line, sweeps in a
worker pool and the trends the report is meant to show.
"""
import yaml
from click.testing import CliRunner

from torusflux.cli import cli
from torusflux.core.config import parse_config
from torusflux.harness import run_sweep

REPORT_FILES = (
    "sweep_summary.csv",
    "kernel_table.csv",
    "defect_table.csv",
    "pairwise_table.csv",
    "report.md",
)


def write_document(path, **sections):
    """YAML configuration on top of a short 1D run"""
    document = {
        "grid": {"n_per_axis": 64},
        "scheme": {"dt": 1e-3, "t_end": 0.02},
        "diagnostics": {"kernel": {"h_list": [0.25, 0.125]}},
    }
    for name, values in sections.items():
        document.setdefault(name, {}).update(values)
    path.write_text(yaml.safe_dump(document))
    return path


def test_cli_workflow(tmp_path):
    """Test run, sweep and analyze through the command line"""
    runner = CliRunner()
    run_file = write_document(tmp_path / "run.yml")
    sweep_file = write_document(tmp_path / "sweep.yml", sweep={"axes": {"delta": [0.1, 0.01]}})

    result = runner.invoke(cli, ["run", "-c", str(run_file), "-o", str(tmp_path / "single")])
    assert result.exit_code == 0, result.output

    result = runner.invoke(cli, ["sweep", "-c", str(sweep_file), "-o", str(tmp_path / "sweep")])
    assert result.exit_code == 0, result.output

    before = {name: (tmp_path / "sweep" / name).read_bytes() for name in REPORT_FILES}
    result = runner.invoke(cli, ["analyze", str(tmp_path / "sweep")])
    assert result.exit_code == 0, result.output
    for name in REPORT_FILES:
        assert (tmp_path / "sweep" / name).read_bytes() == before[name], name

    report_md = (tmp_path / "sweep" / "report.md").read_text()
    assert report_md.startswith("# torusflux report")


def test_worker_pool_is_bit_identical(tmp_path):
    """Test that the pool produces the same files as a serial sweep"""
    config_file = write_document(tmp_path / "sweep.yml", sweep={"axes": {"epsilon": [0.4, 0.3, 0.2]}})
    config = parse_config(config_file.read_text())

    run_sweep(config, out_dir=tmp_path / "serial", workers=1)
    run_sweep(config, out_dir=tmp_path / "pool", workers=3)

    for name in REPORT_FILES + ("monitors_run_002.csv",):
        assert (tmp_path / "pool" / name).read_bytes() == (tmp_path / "serial" / name).read_bytes(), name


def test_epsilon_sweep_is_cauchy(tmp_path):
    """Test that consecutive differences shrink as ε halves"""
    config_file = write_document(
        tmp_path / "sweep.yml",
        grid={"n_per_axis": 256},
        scheme={"dt": 1e-3, "t_end": 0.1},
        sweep={"axes": {"epsilon": [0.4, 0.2, 0.1, 0.05]}},
    )

    report = run_sweep(parse_config(config_file.read_text()), out_dir=tmp_path / "out")

    assert all(m.status == "complete" for m in report.runs)
    differences = [row.rho_l1 for row in report.pairwise]
    assert len(differences) == 3
    assert all(b < a for a, b in zip(differences, differences[1:]))
    assert report.pairwise[-1].order > 0.5


def test_delta_sweep_mass_loss(tmp_path):
    """Test that the damping mass loss falls with δ"""
    config_file = write_document(
        tmp_path / "sweep.yml",
        scheme={"dt": 1e-3, "t_end": 0.05},
        sweep={"axes": {"delta": [0.1, 0.01, 0.001]}},
    )

    report = run_sweep(parse_config(config_file.read_text()), out_dir=tmp_path / "out")

    losses = [m.summary["mass_loss"] for m in report.runs]
    assert all(loss > 0 for loss in losses)
    assert losses[0] > losses[1] > losses[2]


def test_bogovskii_pairing_ratio(tmp_path):
    """Test ∫π_μ(ρ)ρ^α < 2∫ρ^{Γ+α} for μ = 1 with mass one per unit volume"""
    config_file = write_document(tmp_path / "run.yml", law={"mu": 1.0})

    report = run_sweep(parse_config(config_file.read_text()), out_dir=tmp_path / "out")

    bogovskii = report.runs[0].summary["bogovskii"]
    ratio = bogovskii["pressure_pairing"] / bogovskii["rho_power_integral"]
    assert 1.0 < ratio < 2.0


def test_delta_sweep_rho_power_bound(tmp_path):
    """Test that ∫ρ^{Γ+α} stays bounded as δ decreases, at most doubling per decade"""
    config_file = write_document(
        tmp_path / "sweep.yml",
        law={"mu": 1.0},
        scheme={"dt": 1e-3, "t_end": 0.1},
        sweep={"axes": {"delta": [0.1, 0.01, 0.001]}},
    )

    report = run_sweep(parse_config(config_file.read_text()), out_dir=tmp_path / "out")

    assert all(m.status == "complete" for m in report.runs)
    runs = sorted(report.runs, key=lambda m: m.axis_values["delta"], reverse=True)
    integrals = [m.summary["bogovskii"]["rho_power_integral"] for m in runs]
    assert all(value > 0 for value in integrals)
    ratios = [later / earlier for earlier, later in zip(integrals, integrals[1:])]
    assert all(ratio < 2.0 for ratio in ratios)
