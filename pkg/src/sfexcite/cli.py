"""Command-line interface for signal design, batch experiments, scoring,
and plot-data emission."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .core import Dataset
from .harness import (
    ExperimentConfig,
    MetricsReport,
    build_plant,
    emit_plotdata,
    generate_signal,
    load_config,
    load_report,
    run_experiment,
    supporting_set,
    true_regressors,
    _normalized_roi,
)
from .metrics import evaluation_set, score_design


def _load(config_path: str) -> ExperimentConfig:
    return load_config(config_path)


@click.group()
def main():
    """Space-filling excitation signal design and evaluation."""


@main.command("design")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--out-dir", default="out", show_default=True, type=click.Path())
@click.option("--method", default="proposed-fixed", show_default=True)
def design_cmd(config_path, seed, out_dir, method):
    """Generate a single excitation signal."""
    config = _load(config_path)
    psi = supporting_set(config.region_of_interest, config.n_psi_effective)
    inputs, run = generate_signal(config, method, seed, psi)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_u = inputs.shape[1]
    import csv as _csv
    with open(out / "signal.csv", "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow([f"u_{i + 1}" for i in range(n_u)])
        for row in inputs:
            writer.writerow([repr(float(v)) for v in row])
    if run is not None:
        run.to_csv(out / "run.csv")
        run.to_json(out / "run.json")
    click.echo(f"wrote {out / 'signal.csv'} ({inputs.shape[0]} samples, method={method})")


@main.command("experiment")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", default="out", show_default=True, type=click.Path())
@click.option("--replicates", default=None, type=int, help="Override replicate count.")
@click.option("--method", default=None, help="Restrict to one method.")
@click.option("--seed", default=None, type=int, help="Override base seed.")
@click.option("--jobs", default=1, show_default=True, type=int)
def experiment_cmd(config_path, out_dir, replicates, method, seed, jobs):
    """Run the full replicate study and persist metrics."""
    from dataclasses import replace

    config = _load(config_path)
    if replicates is not None:
        config = replace(config, replicates=replicates)
    if method is not None:
        config = replace(config, methods=(method,))
    if seed is not None:
        config = replace(config, base_seed=seed)
    report = run_experiment(config, out_dir=out_dir, jobs=jobs, log=click.echo)
    click.echo(json.dumps(report.aggregate(), indent=2))
    if report.any_failed:
        sys.exit(1)


@main.command("metrics")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--signal", "signal_path", required=True, type=click.Path(exists=True),
              help="CSV signal file with u_* columns.")
@click.option("--out-dir", default=None, type=click.Path())
def metrics_cmd(config_path, signal_path, out_dir):
    """Score an existing CSV signal against the configured plant."""
    config = _load(config_path)
    inputs = np.genfromtxt(signal_path, delimiter=",", skip_header=1, ndmin=2)
    inputs = inputs[:, : config.narx.n_u]
    rows = true_regressors(config, inputs)
    ev = evaluation_set(_normalized_roi(config), config.n_e)
    metrics = score_design(rows, _normalized_roi(config), ev, config.bins_per_axis)
    payload = {"R": metrics.R, "JSD": metrics.JSD}
    click.echo(json.dumps(payload, indent=2))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics.to_json(out / "metrics.json")
        metrics.progress_to_csv(out / "R_progress.csv")


@main.command("plotdata")
@click.option("--run-dir", required=True, type=click.Path(exists=True),
              help="Directory written by the experiment command.")
@click.option("--kind", type=click.Choice(["boxplot", "progress"]), required=True)
@click.option("--out-dir", default=None, type=click.Path())
def plotdata_cmd(run_dir, kind, out_dir):
    """Emit figure data from a persisted experiment."""
    report = load_report(run_dir)
    out = Path(out_dir) if out_dir is not None else Path(run_dir) / "plotdata"
    for path in emit_plotdata(report, kind, out):
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
