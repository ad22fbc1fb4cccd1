# SPDX-License-Identifier: Apache-2.0

# Third Party
import click

# First Party
from samsde import clickext
from samsde.utils import print_table

# Local
from .registry import REGISTRY


@click.command(name="list")
@clickext.display_params
def experiment_list():
    """Lists the experiment kinds"""
    data = [
        [
            e.kind,
            e.reproduces,
            ", ".join(f"plot-{figure}.svg" for figure in e.figures),
            e.description,
        ]
        for e in REGISTRY.values()
    ]
    print_table(["Kind", "Reproduces", "Figures", "Description"], data)
