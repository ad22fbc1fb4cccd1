# SPDX-License-Identifier: Apache-2.0

# Standard
import sys

# Third Party
import click
import ruamel.yaml

# First Party
from samsde import clickext
from samsde import configuration as cfg

# Local
from .registry import REGISTRY, get_experiment


@click.command()
@click.argument("kind", type=click.Choice(list(REGISTRY)))
@click.option(
    "--paper-scale",
    is_flag=True,
    help="Show the full published sizes instead of the desk-scale defaults.",
)
@click.option("--seed", type=int, default=0, show_default=True, help="Base seed.")
@click.pass_context
@clickext.display_params
def show(ctx: click.Context, kind: str, paper_scale: bool, seed: int) -> None:
    """Prints the default experiment file of KIND as YAML

    Field descriptions and defaults become comments, so the output is a
    ready-to-edit template for `samsde run`.
    """
    params = get_experiment(kind).default_params()
    if paper_scale:
        params = params.at_paper_scale()
    exp_cfg = cfg.ExperimentConfig(seed=seed, experiment=params)
    try:
        cfg.dump_config(exp_cfg, sys.stdout)
    except ruamel.yaml.YAMLError as e:
        click.secho(f"Error dumping config as YAML: {e}", fg="red")
        ctx.exit(2)
