# SPDX-License-Identifier: Apache-2.0

# Third Party
import click

# First Party
from samsde import clickext
from samsde import configuration as cfg


@click.group(
    cls=clickext.LazyEntryPointGroup,
    ep_group="samsde.command",
)
@click.option(
    "--config",
    "config_file",
    type=click.Path(),
    default=cfg.DEFAULTS.CONFIG_FILE,
    show_default=True,
    help="Path to a settings file.",
)
@click.option(
    "-v",
    "--verbose",
    "debug_level",
    count=True,
    default=0,
    show_default=False,
    help="Enable debug logging (repeat for even more verbosity)",
)
@click.version_option(package_name="samsde")
@click.pass_context
# pylint: disable=redefined-outer-name
def samsde(ctx, config_file, debug_level: int = 0):
    """Simulate SAM-family optimizers and their SDE models.

    Every experiment is described by a YAML file; `samsde show <kind>`
    prints a template and `samsde run <file>` writes its tables and plots.
    """
    cfg.init(ctx, config_file, debug_level)
