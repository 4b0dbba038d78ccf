"""Command-line driver.

Subcommands: run (single pipeline), sweep (parameter grid + Pareto + scales),
multilevel (nested partitions), synth (emit a synthetic city), validate
(check inputs). Flags override keys from the YAML config file, and every run
is deterministic for a fixed (config, seed).
"""

from __future__ import annotations

import sys
from dataclasses import replace
from pathlib import Path

import click

from . import io as tio
from .errors import TazoneError
from .pipeline import PipelineConfig, load_city, load_config, run_multilevel, run_pipeline, run_sweep
from .synth import make_city


def _config_from(config_path: str | None, **overrides) -> PipelineConfig:
    if config_path:
        cfg = load_config(config_path)
    else:
        cfg = PipelineConfig(synth=True)
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **clean) if clean else cfg


def _run_guarded(action, config_path: str | None, out: str | None, **overrides):
    """Build the config and run ``action``; on error, write errors.json into
    the effective output directory and exit nonzero."""
    cfg = None
    try:
        cfg = _config_from(config_path, out=out, **overrides)
        return cfg, action(cfg)
    except TazoneError as exc:
        _fail(cfg.out if cfg is not None else (out or "out"), exc)


def _fail(out: str | None, exc: TazoneError) -> None:
    message = str(exc)
    issues = getattr(exc, "issues", [])
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        tio.write_error_report(out_dir / "errors.json", message, issues)
    click.echo(f"error: {message}", err=True)
    for issue in issues[:20]:
        click.echo(f"  - {issue}", err=True)
    sys.exit(1)


config_option = click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file.")
seed_option = click.option("--seed", type=int, default=None, help="Random seed override.")
out_option = click.option("--out", type=click.Path(), default=None, help="Output directory override.")
workers_option = click.option("--workers", type=int, default=None, help="Parallel grid workers.")


@click.group()
def main() -> None:
    """Multi-objective regionalization of city spatial units."""


@main.command()
@config_option
@seed_option
@out_option
@click.option("--scenario", type=click.Choice(["user_coverage", "mobility_coverage", "high_value_coverage"]), default=None)
def run(config_path, seed, out, scenario) -> None:
    """Run the full pipeline once and write the partition artifacts."""
    _, report = _run_guarded(run_pipeline, config_path, out, seed=seed, scenario=scenario)
    click.echo(
        f"partition written to {report.out_dir}: {report.vector.n_regions} regions, "
        f"f_sem={report.vector.f_sem:.3f} f_pop={report.vector.f_pop:.3f} "
        f"f_od={report.vector.f_od:.3f}"
    )


@main.command()
@config_option
@seed_option
@out_option
@workers_option
@click.option("--scenario", type=click.Choice(["user_coverage", "mobility_coverage", "high_value_coverage"]), default=None)
@click.option("--figures/--no-figures", "figures", default=None, help="Render sweep/Pareto figures.")
def sweep(config_path, seed, out, workers, scenario, figures) -> None:
    """Evaluate a parameter grid; write objectives, Pareto flags, scales."""
    _, report = _run_guarded(
        run_sweep, config_path, out,
        seed=seed, workers=workers, scenario=scenario, figures=figures,
    )
    click.echo(
        f"sweep written to {report.out_dir}: {len(report.vectors)} schemes, "
        f"{sum(report.flags)} on the Pareto front, {len(report.failures)} failed, "
        f"{len(report.scales)} characteristic scale(s)"
    )


@main.command()
@config_option
@seed_option
@out_option
@click.option("--method", type=click.IntRange(1, 3), default=None, help="Hierarchy method (1, 2, or 3).")
def multilevel(config_path, seed, out, method) -> None:
    """Produce nested (methods 1-2) or per-scale (method 3) partitions."""
    _, report = _run_guarded(
        lambda cfg: run_multilevel(cfg, method), config_path, out, seed=seed
    )
    nested = "n/a" if report.nested is None else str(report.nested)
    click.echo(
        f"multilevel output in {report.out_dir}: {len(report.levels)} level(s), nested={nested}"
    )


@main.command()
@config_option
@seed_option
@out_option
def synth(config_path, seed, out) -> None:
    """Generate a synthetic city and write units.geojson + od.csv."""
    def emit(cfg):
        city = make_city(cfg.city_config())
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        tio.write_units_geojson(city, out_dir / "units.geojson")
        tio.write_od_csv(city.od, out_dir / "od.csv")
        return city, out_dir

    _, (city, out_dir) = _run_guarded(emit, config_path, out, seed=seed)
    click.echo(
        f"synthetic city written to {out_dir}: {len(city.units)} units, "
        f"{len(city.blocks)} blocks, {len(city.od.entries)} od pairs"
    )


@main.command()
@config_option
@seed_option
@out_option
def validate(config_path, seed, out) -> None:
    """Ingest and validate the configured inputs without running anything."""
    _, city = _run_guarded(load_city, config_path, out, seed=seed)
    click.echo(
        f"inputs valid: {len(city.units)} units, {len(city.blocks)} blocks, "
        f"{len(city.fields)} attribute fields, "
        f"{len(city.semantics.categories)} semantic categories"
    )


if __name__ == "__main__":  # pragma: no cover
    main()
