"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 partial failures (see the
run directory's manifest.json), 3 I/O error.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import click

from ._version import __version__
from .config import ExperimentConfig, load_config, validate_datasets
from .errors import ConfigError
from .runner import (plot_from_outputs, rerank_from_results, run_distances_only,
                     run_experiment, run_transform_only)

EXIT_CONFIG = 1
EXIT_PARTIAL = 2
EXIT_IO = 3


@dataclass
class CliState:
    config_path: Path | None
    seed: int | None
    resume: bool
    jobs: int

    def load(self) -> ExperimentConfig:
        if self.config_path is None:
            raise ConfigError("no config file given; pass --config <path>")
        return load_config(self.config_path, seed_override=self.seed)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              help="Path to the experiment JSON config.")
@click.option("--seed", type=int, default=None,
              help="Override the config's master seed.")
@click.option("--resume", is_flag=True, help="Skip cells already staged.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Concurrent evaluation cells.")
@click.pass_context
def main(ctx, config_path, seed, resume, jobs):
    """Robustness benchmarking for hierarchical time series forecasting."""
    ctx.obj = CliState(config_path=config_path, seed=seed, resume=resume, jobs=jobs)


def _guard(action):
    try:
        return action()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except FileNotFoundError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(EXIT_IO)


@main.command()
@click.pass_obj
def validate(state: CliState):
    """Check that the config and its datasets are usable."""

    def action():
        config = state.load()
        datasets = validate_datasets(config)
        for name, dataset in sorted(datasets.items()):
            click.echo(f"dataset {name}: {len(dataset.series_ids)} series, "
                       f"length {dataset.length}, period {dataset.seasonal_period}")
        click.echo(f"config OK (hash {config.hash()})")

    _guard(action)


@main.command()
@click.pass_obj
def transform(state: CliState):
    """Write every semi-synthetic variant dataset as a CSV."""

    def action():
        config = state.load()
        written = run_transform_only(config)
        click.echo(f"wrote {len(written)} variant files under "
                   f"{config.run_dir() / 'variants'}")

    _guard(action)


@main.command()
@click.pass_obj
def distances(state: CliState):
    """Compute pairwise DTW distance distributions only."""

    def action():
        config = state.load()
        manifest = run_distances_only(config, resume=state.resume, jobs=state.jobs)
        click.echo(f"distance tables written to {config.run_dir()}")
        if manifest.any_failed:
            click.echo(f"{len(manifest.failed_cells)} cells failed; see manifest.json",
                       err=True)
            sys.exit(EXIT_PARTIAL)

    _guard(action)


@main.command()
@click.pass_obj
def run(state: CliState):
    """Run the full pipeline: evaluations, distances, reports, charts."""

    def action():
        config = state.load()
        manifest = run_experiment(config, resume=state.resume, jobs=state.jobs)
        done = sum(1 for info in manifest.cells.values() if info.get("status") == "done")
        click.echo(f"{done}/{len(manifest.cells)} cells done; "
                   f"outputs in {config.run_dir()}")
        if manifest.any_failed:
            click.echo(f"{len(manifest.failed_cells)} cells failed; see manifest.json",
                       err=True)
            sys.exit(EXIT_PARTIAL)

    _guard(action)


@main.command()
@click.pass_obj
def rank(state: CliState):
    """Recompute rank tables from an existing results.csv."""

    def action():
        config = state.load()
        rerank_from_results(config)
        click.echo(f"ranks rewritten under {config.run_dir()}")

    _guard(action)


@main.command()
@click.pass_obj
def plot(state: CliState):
    """Re-emit all SVG charts from a completed run's CSV files."""

    def action():
        config = state.load()
        plot_from_outputs(config)
        click.echo(f"charts written under {config.run_dir() / 'charts'}")

    _guard(action)


if __name__ == "__main__":
    main()
