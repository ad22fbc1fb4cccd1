# SPDX-License-Identifier: Apache-2.0

# Standard
from os import path
from typing import Any
import dataclasses
import os
import sys
import textwrap
import typing

# Third Party
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveInt,
    StrictStr,
    ValidationError,
    field_validator,
    model_validator,
)
from pydantic.fields import FieldInfo
from pydantic_core import PydanticUndefined
from ruamel.yaml import YAML, CommentedMap
from ruamel.yaml.error import YAMLError
from xdg_base_dirs import xdg_config_home, xdg_data_home
import click

# Local
from . import log
from .experiment.params import ExperimentParams

SAMSDE_PACKAGE_NAME = "samsde"
CONFIG_FILENAME = "config.yaml"
CONFIG_VERSION = "1.0.0"
RESOLVED_FILENAME = "config.resolved"

# Initialize ruamel.yaml
yaml = YAML()
yaml.indent(mapping=2, sequence=4, offset=2)


class _SamSdeDefaults:
    """
    Default paths used by samsde.
    They are lazy so tests can relocate $HOME before they are read.
    """

    # SAMSDE_CONFIG points at a settings file used instead of the XDG default
    SAMSDE_CONFIG = "SAMSDE_CONFIG"
    RESULTS_DIR_NAME = "results"

    def __init__(self):
        self._reset()

    def _reset(self):
        """Re-read the XDG base directories; used by tests"""
        self._config_dir = os.path.join(xdg_config_home(), SAMSDE_PACKAGE_NAME)
        self._data_dir = os.path.join(xdg_data_home(), SAMSDE_PACKAGE_NAME)

    @property
    def CONFIG_FILE(self) -> str:
        return os.environ.get(self.SAMSDE_CONFIG) or path.join(
            self._config_dir, CONFIG_FILENAME
        )

    @property
    def RESULTS_DIR(self) -> str:
        return path.join(self._data_dir, self.RESULTS_DIR_NAME)


DEFAULTS = _SamSdeDefaults()


class ConfigException(Exception):
    """A settings or experiment file failed to load or validate."""


# TODO: use logging.getLevelNamesMapping() once Python 3.10 support is dropped
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "WARN", "FATAL", "CRITICAL", "ERROR", "NOTSET")


class _general(BaseModel):
    """Logging settings shared by all commands."""

    model_config = ConfigDict(extra="ignore")

    log_level: StrictStr = Field(default="INFO", description="Log level for logging.")
    debug_level: int = Field(default=0, description="Debug level for logging.")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        if v.upper() not in LOG_LEVELS:
            raise ValueError(f"'{v}' is not a valid log level name. valid levels: {list(LOG_LEVELS)}")
        return v.upper()

    @model_validator(mode="after")
    def after_debug_level(self) -> "_general":
        # DEBUG implies at least debug level 1
        if self.log_level == "DEBUG":
            self.debug_level = max(self.debug_level, 1)
        return self


class _run(BaseModel):
    """Class describing the defaults of the run sub-command."""

    model_config = ConfigDict(extra="ignore")

    threads: PositiveInt = Field(
        default=1, description="Worker threads for ensemble chunks."
    )
    results_dir: str = Field(
        default_factory=lambda: DEFAULTS.RESULTS_DIR,
        description="Directory receiving one sub-directory per experiment run.",
    )
    plots: bool = Field(default=True, description="Write SVG plots.")
    progress: bool = Field(
        default=True, description="Show progress bars on an interactive terminal."
    )


class Config(BaseModel):
    """Settings of the samsde CLI."""

    general: _general = Field(
        default_factory=_general, description="General configuration section."
    )
    run: _run = Field(default_factory=_run, description="Run configuration section.")
    # model configuration
    model_config = ConfigDict(extra="ignore")
    version: str = Field(
        default=CONFIG_VERSION,
        description="Configuration file structure version.",
        frozen=True,
    )


class _output(BaseModel):
    """Where and what an experiment run writes."""

    model_config = ConfigDict(extra="forbid")

    dir: str | None = Field(
        default=None,
        description="Output directory. Unset means <results_dir>/<kind>-seed<seed>.",
    )
    plots: bool = Field(default=True, description="Write plot-*.svg files.")
    every: PositiveInt = Field(
        default=1, description="Write every n-th iteration to results.csv."
    )


class ExperimentConfig(BaseModel):
    """One experiment run; its outputs are a function of this object alone."""

    model_config = ConfigDict(extra="forbid")

    version: str = Field(
        default=CONFIG_VERSION,
        description="Configuration file structure version.",
        frozen=True,
    )
    seed: int = Field(default=0, description="Base seed of every random stream.")
    chunk_size: PositiveInt = Field(
        default=256, description="Trajectories advanced together per work unit."
    )
    output: _output = Field(default_factory=_output, description="Output section.")
    experiment: ExperimentParams = Field(description="Experiment kind and parameters.")


def get_default_config() -> Config:
    """Generates default configuration for CLI"""
    return Config()


def _validation_message(exc: ValidationError, source: typing.Any) -> str:
    lines = [f"{exc.error_count()} errors in {source}:"]
    for err in exc.errors():
        where = "->".join(str(loc) for loc in err.get("loc", ()))
        lines.append(f"- {err.get('type', '')} {where}: {err.get('msg', '').lower()}")
    return "\n".join(lines) + "\n"


def _expand(value: typing.Any) -> typing.Any:
    """Expand ~ and $VARS in every string of a loaded YAML tree, in place"""
    if isinstance(value, str):
        return os.path.expandvars(os.path.expanduser(value))
    if isinstance(value, dict):
        for key in value:
            value[key] = _expand(value[key])
    elif isinstance(value, list):
        value[:] = [_expand(v) for v in value]
    return value


def _load_yaml(config_file: str | os.PathLike[str]) -> dict:
    try:
        with open(config_file, "r", encoding="utf-8") as yamlfile:
            content = yaml.load(yamlfile)
    except OSError as exc:
        raise ConfigException(f"cannot read {config_file}: {exc}") from exc
    except YAMLError as exc:
        raise ConfigException(f"{config_file} is not valid YAML: {exc}") from exc
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigException(f"{config_file} must contain a mapping at the top level")
    return _expand(content)


def read_config(
    config_file: str | os.PathLike[str] | None = None,
) -> Config:
    """Reads CLI settings from disk."""
    config_file = DEFAULTS.CONFIG_FILE if config_file is None else config_file
    content = _load_yaml(config_file)
    try:
        return Config(**content)
    except ValidationError as exc:
        raise ConfigException(_validation_message(exc, config_file)) from exc


def experiment_config_from_dict(
    content: dict[str, Any], *, source: str = "<config>", paper_scale: bool = False
) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(content)
    except ValidationError as exc:
        raise ConfigException(_validation_message(exc, source)) from exc
    if paper_scale:
        cfg = cfg.model_copy(update={"experiment": cfg.experiment.at_paper_scale()})
    return cfg


def read_experiment_config(
    config_file: str | os.PathLike[str], *, paper_scale: bool = False
) -> ExperimentConfig:
    """Reads and validates an experiment file.

    With ``paper_scale`` the experiment's paper-scale sizes replace every
    size the file leaves at its default.
    """
    content = _load_yaml(config_file)
    return experiment_config_from_dict(
        content, source=os.fspath(config_file), paper_scale=paper_scale
    )


def get_dict(cfg: BaseModel) -> dict[str, typing.Any]:
    """Returns configuration as a dictionary"""
    return cfg.model_dump(mode="json")


def _field_default(field: FieldInfo) -> typing.Any:
    if field.default is not PydanticUndefined:
        return field.default
    if field.default_factory is not None:
        return field.default_factory()  # type: ignore[call-arg]
    return PydanticUndefined


def _default_text(default: typing.Any) -> str | None:
    if default is PydanticUndefined or isinstance(default, BaseModel):
        return None
    if isinstance(default, (list, tuple)):
        return "[" + ", ".join(str(getattr(v, "value", v)) for v in default) + "]"
    if default == "":
        return "''"
    return str(getattr(default, "value", default))


def config_to_commented_map(cfg: BaseModel, indent: int = 0) -> CommentedMap:
    """YAML mapping of a model, each key preceded by its description and default

    ```
    # Iterations per trajectory.
    # Default: 1000
    steps: 1000
    ```

    Leaves come from the JSON-mode dump, so enums and tuples are written as
    plain scalars and sequences and the YAML validates back to an equal
    model.
    """
    cm = CommentedMap()
    dumped = cfg.model_dump(mode="json")
    for name, field in sorted(type(cfg).model_fields.items()):
        value = getattr(cfg, name)
        if isinstance(value, BaseModel):
            cm[name] = config_to_commented_map(value, indent + 2)
        else:
            cm[name] = dumped[name]
        comment = []
        if field.description:
            comment.append(textwrap.fill(field.description, width=80, break_long_words=False))
        default = _default_text(_field_default(field))
        if default is not None:
            comment.append(f"Default: {default}")
        if comment:
            cm.yaml_set_comment_before_after_key(name, before="\n".join(comment), indent=indent)
    return cm


def write_config_to_yaml(cfg: BaseModel, file_path: str | os.PathLike[str]) -> None:
    """Write a model as commented YAML with LF line endings"""
    with open(file_path, "w", encoding="utf-8", newline="\n") as yamlfile:
        yaml.dump(config_to_commented_map(cfg), yamlfile)


def dump_config(cfg: BaseModel, stream: typing.TextIO = sys.stdout) -> None:
    yaml.dump(config_to_commented_map(cfg), stream)


def write_config(cfg: Config, config_file: str | None = None) -> None:
    """Writes CLI settings to disk"""
    config_file = DEFAULTS.CONFIG_FILE if config_file is None else config_file
    os.makedirs(path.dirname(config_file) or ".", exist_ok=True)
    write_config_to_yaml(cfg, config_file)


@dataclasses.dataclass
class Lab:
    """Settings and their source, shared by all sub-commands via ``ctx.obj``

    A settings file that failed to load is reported only by commands that
    need it, through :meth:`ensure_config`.
    """

    config: Config
    config_file: str | os.PathLike[str] | None
    error_msg: str | None = None

    def ensure_config(self, ctx: click.Context) -> None:
        if self.error_msg is not None:
            ctx.fail(self.error_msg)


def init(
    ctx: click.Context, config_file: str | os.PathLike[str], debug_level: int = 0
) -> None:
    """Load the settings into ``ctx.obj`` and configure logging

    A missing default settings file means defaults. A broken or missing
    explicit file is remembered and reported by commands that need it, so
    ``--help`` and ``show`` keep working.
    """
    config_obj = get_default_config()
    error_msg: str | None = None
    if os.path.isfile(config_file):
        try:
            config_obj = read_config(config_file)
        except ConfigException as e:
            error_msg = str(e)
    elif os.fspath(config_file) != DEFAULTS.CONFIG_FILE:
        error_msg = f"`{config_file}` does not exist or is not a readable file."

    ctx.obj = Lab(config_obj, config_file, error_msg)
    ctx.default_map = get_dict(config_obj)

    general = config_obj.general
    if debug_level > 0:
        # -v wins over the settings file
        general.log_level, general.debug_level = "DEBUG", debug_level
    log.configure_logging(log_level=general.log_level, debug_level=general.debug_level)
