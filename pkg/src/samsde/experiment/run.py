# SPDX-License-Identifier: Apache-2.0

# Standard
import logging
import os
import sys
import time

# Third Party
import click

# First Party
from samsde import clickext
from samsde import configuration as cfg
from samsde.core.errors import SamSdeError

# Local
from .registry import get_experiment
from .suites import RunContext

logger = logging.getLogger(__name__)


def output_dir(exp_cfg: cfg.ExperimentConfig, results_dir: str, out: str | None) -> str:
    """--out, then output.dir, then <results_dir>/<kind>-seed<seed>"""
    if out:
        return out
    if exp_cfg.output.dir:
        return exp_cfg.output.dir
    return os.path.join(results_dir, f"{exp_cfg.experiment.kind}-seed{exp_cfg.seed}")


@click.command()
@click.argument(
    "config_path",
    metavar="CONFIG",
    type=click.Path(exists=True, dir_okay=False),
)
@click.option(
    "--seed",
    type=int,
    default=None,
    help="Base seed, overrides the seed of the experiment file.",
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    cls=clickext.ConfigOption,
)
@click.option(
    "--paper-scale",
    is_flag=True,
    help="Use the full published sizes for every size the file leaves unset.",
)
@click.option(
    "--out",
    "out",
    type=click.Path(file_okay=False),
    default=None,
    help="Output directory, overrides output.dir of the experiment file.",
)
@click.option(
    "--plots/--no-plots",
    cls=clickext.ConfigOption,
)
@click.option(
    "--progress/--no-progress",
    cls=clickext.ConfigOption,
)
@click.pass_context
@clickext.display_params
def run(
    ctx: click.Context,
    config_path: str,
    seed: int | None,
    threads: int,
    paper_scale: bool,
    out: str | None,
    plots: bool,
    progress: bool,
) -> None:
    """Runs the experiment described by CONFIG

    Writes results.csv, summary.csv, further tables, SVG plots and
    config.resolved, the fully-defaulted experiment file.
    """
    ctx.obj.ensure_config(ctx)
    try:
        exp_cfg = cfg.read_experiment_config(config_path, paper_scale=paper_scale)
    except cfg.ConfigException as e:
        click.secho(f"Invalid experiment file:\n{e}", fg="red")
        raise click.exceptions.Exit(1)
    if seed is not None:
        exp_cfg = exp_cfg.model_copy(update={"seed": seed})

    experiment = get_experiment(exp_cfg.experiment.kind)
    out_dir = output_dir(exp_cfg, ctx.obj.config.run.results_dir, out)
    context = RunContext(
        seed=exp_cfg.seed,
        chunk_size=exp_cfg.chunk_size,
        threads=threads,
        progress=progress and sys.stderr.isatty(),
    )

    logger.info("running %s with seed %d", experiment.kind, exp_cfg.seed)
    start = time.monotonic()
    try:
        report = experiment.runner(exp_cfg.experiment, context)
    except (SamSdeError, ValueError) as e:
        click.secho(f"{experiment.kind} failed: {e}", fg="red")
        raise click.exceptions.Exit(1)
    logger.info("%s finished in %.1fs", experiment.kind, time.monotonic() - start)

    try:
        os.makedirs(out_dir, exist_ok=True)
        cfg.write_config_to_yaml(exp_cfg, os.path.join(out_dir, cfg.RESOLVED_FILENAME))
        written = report.write(
            out_dir,
            every=exp_cfg.output.every,
            plots=plots and exp_cfg.output.plots,
        )
    except OSError as e:
        click.secho(f"Cannot write results to {out_dir}: {e}", fg="red")
        raise click.exceptions.Exit(1)
    click.echo(f"Wrote {len(written) + 1} files to {out_dir}")
