"""Command-line interface for torusflux

Provides commands for run, sweep, analyze and certify-law.
"""
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import click

from torusflux import __version__
from torusflux.core.config import SweepConfig, parse_config
from torusflux.core.errors import ConfigError, TorusfluxError
from torusflux.harness.report import emit_report
from torusflux.harness.sweep import ConvergenceReport, load_report, run_sweep
from torusflux.laws import builtin_laws, certify_law, law_from_dict


@click.group()
@click.version_option(version=__version__, prog_name="torusflux")
@click.option("--verbose", "-v", is_flag=True, help="Log debug messages")
def cli(verbose: bool):
    """Torusflux: regularized compressible flow lab on the periodic torus

    Runs the mollified, damped scheme, sweeps its regularization
    parameters and reports the structural diagnostics.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_config(config_path: Optional[str], stride: Optional[int]) -> SweepConfig:
    """Parse a config file (defaults only without one) with env overrides"""
    text = Path(config_path).read_text() if config_path else ""
    try:
        config = parse_config(text, os.environ)
    except ConfigError as e:
        click.echo(f"Error: invalid configuration{f' {config_path}' if config_path else ''}", err=True)
        for location, message in e.entries:
            click.echo(f"  {location}: {message}" if location else f"  {message}", err=True)
        sys.exit(1)
    if stride is not None:
        if stride < 1:
            click.echo("Error: --stride must be at least 1", err=True)
            sys.exit(1)
        config.base["diagnostics"]["stride"] = stride
    return config


def _execute(config: SweepConfig, out: Optional[str], workers: Optional[int], force: bool) -> ConvergenceReport:
    try:
        return run_sweep(config, out_dir=out, workers=workers, force=force)
    except TorusfluxError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)


def _print_runs(report: ConvergenceReport) -> None:
    for metadata in report.runs:
        summary = metadata.summary
        axes = ", ".join(f"{k}={v:g}" for k, v in metadata.axis_values.items())
        line = f"  {metadata.run_id}"
        if axes:
            line += f" [{axes}]"
        line += f": {metadata.status}, {metadata.steps} steps, t = {metadata.t_final:.6g}"
        if "mass_loss" in summary:
            line += f", mass loss {summary['mass_loss']:.3e}"
        if "energy_violation" in summary:
            line += f", energy violation {summary['energy_violation']:.3e}"
        click.echo(line)
        if metadata.error:
            click.echo(f"    error: {metadata.error}")


def _config_option(fn):
    return click.option(
        "--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML configuration"
    )(fn)


def _out_option(fn):
    return click.option("--out", "-o", default=None, help="Output directory (outputs.dir by default)")(fn)


@cli.command()
@_config_option
@_out_option
@click.option("--force", "-f", is_flag=True, help="Replace existing results")
@click.option("--stride", "-k", type=int, default=None, help="Steps between diagnostics records")
def run(config_path: Optional[str], out: Optional[str], force: bool, stride: Optional[int]):
    """Run one configuration to its horizon"""
    config = _load_config(config_path, stride)
    if config.axes:
        click.echo("Error: configuration has sweep axes; use `torusflux sweep`", err=True)
        sys.exit(1)
    report = _execute(config, out, 1, force)
    click.echo(f"Run written to {Path(out or config.outputs['dir']).expanduser()}")
    _print_runs(report)
    if any(m.status != "complete" for m in report.runs):
        sys.exit(1)


@cli.command()
@_config_option
@_out_option
@click.option("--workers", "-w", type=int, default=None, help="Worker processes (sweep.workers by default)")
@click.option("--force", "-f", is_flag=True, help="Replace existing results")
@click.option("--stride", "-k", type=int, default=None, help="Steps between diagnostics records")
def sweep(config_path: Optional[str], out: Optional[str], workers: Optional[int], force: bool, stride: Optional[int]):
    """Run every point of the configured axes and write the report"""
    config = _load_config(config_path, stride)
    if workers is not None and workers < 1:
        click.echo("Error: --workers must be at least 1", err=True)
        sys.exit(1)
    click.echo(f"Sweep of {config.size} run(s)")
    report = _execute(config, out, workers, force)
    click.echo(f"Report written to {Path(out or config.outputs['dir']).expanduser()}")
    _print_runs(report)
    if report.pairwise:
        click.echo(f"  {len(report.pairwise)} pairwise rows, {len(report.kernel_rows)} kernel rows")


@cli.command()
@click.argument("out", type=click.Path(exists=True, file_okay=False))
@click.option("--recompute", is_flag=True, help="Recompute monitor records from the stored snapshots")
def analyze(out: str, recompute: bool):
    """Rebuild the report of OUT from its persisted runs

    Records of runs whose monitors.csv is missing are always recomputed.
    """
    try:
        report = load_report(out, recompute=recompute)
    except (TorusfluxError, OSError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)
    if not report.runs:
        click.echo(f"No runs found in {out}")
    try:
        written = emit_report(report, out)
    except (TorusfluxError, OSError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)
    click.echo(f"Rewrote {len(written)} report files in {out}")
    _print_runs(report)


@cli.command("certify-law")
@_config_option
@click.option("--builtin", is_flag=True, help="Certify the built-in law family instead")
@click.option("--json", "as_json", is_flag=True, help="Print the reports as JSON")
def certify_law_cmd(config_path: Optional[str], builtin: bool, as_json: bool):
    """Run the pressure-law invariant suite"""
    if builtin:
        laws = builtin_laws()
    else:
        config = _load_config(config_path, None)
        try:
            laws = [law_from_dict(config.base["law"])]
        except TorusfluxError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)

    try:
        reports = [certify_law(law) for law in laws]
    except TorusfluxError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)
    if as_json:
        click.echo(json.dumps([r.to_dict() for r in reports], indent=2))
    else:
        for law, report in zip(laws, reports):
            mark = "✓" if report.passed else "✗"
            click.echo(f"{mark} {law!r}")
            for check in report.checks:
                if not check.passed:
                    click.echo(f"    {check.name}: {check.detail} (worst {check.worst:.3e})")
            if report.split:
                click.echo(f"    split: M = {report.split['M']:.4g}, λ_q = {report.split['lambda_q']:.4g}")
    if not all(r.passed for r in reports):
        sys.exit(1)


def main():
    """Main entry point"""
    cli(auto_envvar_prefix="TORUSFLUX")


if __name__ == "__main__":
    main()
