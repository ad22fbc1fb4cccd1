# SPDX-License-Identifier: Apache-2.0
"""Click extensions for samsde

Sub-commands are entry points of the ``samsde.command`` group and are
imported on first use, so ``samsde --help`` never pulls in matplotlib.
"""

# Standard
from importlib import metadata
import functools
import json
import logging
import typing

# Third Party
from click_didyoumean import DYMGroup
from pydantic import BaseModel
import click

# First Party
from samsde.utils import print_table

logger = logging.getLogger(__name__)


class LazyEntryPointGroup(DYMGroup):
    """Command group whose sub-commands come from an entry point group

    Registered in ``pyproject.toml``:

        [project.entry-points."samsde.command"]
        "run" = "samsde.experiment.run:run"
    """

    def __init__(self, *args: typing.Any, ep_group: str, **kwargs: typing.Any) -> None:
        super().__init__(*args, **kwargs)
        self.ep_group = ep_group
        self._entry_points = {
            ep.name: ep for ep in metadata.entry_points(group=ep_group)
        }
        if not self._entry_points:
            raise ValueError(f"entry point group {ep_group!r} is empty")
        self._loaded: dict[str, click.Command] = {}

    def list_commands(self, ctx: click.Context) -> list[str]:
        return sorted(set(super().list_commands(ctx)) | set(self._entry_points))

    def get_command(self, ctx: click.Context, cmd_name: str) -> click.Command | None:
        if cmd_name not in self._entry_points:
            return super().get_command(ctx, cmd_name)
        if cmd_name not in self._loaded:
            logger.debug("loading command %s from %s", cmd_name, self.ep_group)
            self._loaded[cmd_name] = self._entry_points[cmd_name].load()
        return self._loaded[cmd_name]


class ConfigOption(click.Option):
    """Option documented and defaulted by the settings file

    The option ``--threads`` of command ``run`` is backed by the settings
    field ``run.threads``: click reads its default from the context's
    ``default_map`` and the help line shows the field description:

        --threads INTEGER  Worker threads for ensemble chunks.
                           [default: 1; config: 'run.threads']
    """

    def __init__(self, *args: typing.Any, **kwargs: typing.Any) -> None:
        super().__init__(*args, **kwargs)
        if self.help:
            raise ValueError(
                f"option {self.name!r} takes its help from the settings field description"
            )
        if self.show_default:
            raise ValueError(f"option {self.name!r}: show_default must be False")

    def get_help_record(self, ctx: click.Context) -> tuple[str, str] | None:
        record = super().get_help_record(ctx)
        if record is None or ctx.obj is None or ctx.default_map is None:
            return record

        path = [str(ctx.command.name), str(self.name)]
        description, default = get_default_and_description(ctx.obj.config, path)
        if isinstance(default, (list, tuple)):
            default = ", ".join(map(str, default))
        extra = f"default: {'<None>' if default is None else default}; config: '{'.'.join(path)}'"

        opts, text = record
        markers = ""
        if text.endswith("]") and "[" in text:
            # keep click's own markers, e.g. [required]
            text, markers = text[: text.rindex("[")].rstrip(), text[text.rindex("[") + 1 : -1]
        parts = [p for p in (description, text) if p]
        bracket = f"{markers}; {extra}" if markers else extra
        return opts, f"{' '.join(parts)} [{bracket}]"


def get_default_and_description(
    cfg: BaseModel, config_identifier: list[str]
) -> tuple[str | None, typing.Any]:
    """Description and default of the settings field at a dotted path

    Raises:
        ValueError: If a path element does not name a field.
    """
    model = cfg
    *sections, name = config_identifier
    for section in sections:
        value = getattr(model, section, None)
        if section not in type(model).model_fields or not isinstance(value, BaseModel):
            raise ValueError(f"{config_identifier} not in {type(cfg).__name__}")
        model = value
    field = type(model).model_fields.get(name)
    if field is None:
        raise ValueError(f"{config_identifier} not in {type(cfg).__name__}")
    return field.description, field.get_default(call_default_factory=True)


def _param_rows(ctx: click.Context, params: dict[str, typing.Any]) -> list[list[str]]:
    rows = []
    for name, value in params.items():
        source = ctx.get_parameter_source(name)
        kind = type(value)
        type_name = kind.__name__ if kind.__module__ == "builtins" else f"{kind.__module__}.{kind.__name__}"
        rows.append(
            [name, repr(value), type_name, source.name.lower() if source else "unknown"]
        )
    return rows


def display_params(f: typing.Callable) -> typing.Callable:
    """Add hidden ``--debug-params`` and ``--debug-params-json`` options

    Both print each parameter with its value, type and source (command
    line, settings file, default) and exit. With DEBUG logging the table is
    printed and the command runs.
    """

    @functools.wraps(f)
    def wrapper(*args: typing.Any, **kwargs: typing.Any) -> typing.Any:
        ctx = click.get_current_context()
        mode: str | None = kwargs.pop("_debug_params")
        if mode is None and logger.isEnabledFor(logging.DEBUG):
            mode = "log"

        params = {k: v for k, v in kwargs.items() if k != "ctx"}
        rows = _param_rows(ctx, params)
        if mode == "json":
            payload = {
                name: [params[name], typ, src] for name, _, typ, src in rows
            }
            click.echo(json.dumps({"params": payload}, default=str))
            ctx.exit()
        if mode == "human" or (mode == "log" and rows):
            click.echo("Parameters:")
            if rows:
                print_table(["name", "value", "type", "source"], rows)
        if mode == "human":
            ctx.exit()
        return f(*args, **kwargs)

    wrapper = click.option(
        "--debug-params-json",
        "_debug_params",
        flag_value="json",
        hidden=True,
        help="Print parameters as JSON and exit.",
    )(wrapper)
    return click.option(
        "--debug-params",
        "_debug_params",
        flag_value="human",
        hidden=True,
        help="Print parameters and exit.",
    )(wrapper)
