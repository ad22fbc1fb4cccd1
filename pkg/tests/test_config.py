# SPDX-License-Identifier: Apache-2.0

# Standard
import io
import logging
import os
import typing

# Third Party
from pydantic import BaseModel, Field
from ruamel.yaml import YAML
from xdg_base_dirs import xdg_data_home
import pydantic
import pytest

# First Party
from samsde import configuration as config
from samsde.clickext import ConfigOption, get_default_and_description
from samsde.experiment.params import (
    SaddleEscape2dParams,
    SuboptimalityParams,
    ValidateSdeParams,
)
from samsde.experiment.registry import REGISTRY
from samsde.log import configure_logging
from samsde.models import Minibatch
from samsde.optim import Variant


def load_yaml(text: str) -> typing.Any:
    return YAML(typ="safe").load(text)


class TestConfig:
    def _assert_defaults(self, cfg: config.Config):
        # spelled out here so a broken DEFAULTS does not hide itself
        results_dir = os.path.join(xdg_data_home(), "samsde", "results")

        assert cfg.version == config.CONFIG_VERSION
        assert cfg.general.log_level == "INFO"
        assert cfg.general.debug_level == 0
        assert cfg.run.threads == 1
        assert cfg.run.results_dir == results_dir
        assert cfg.run.plots
        assert cfg.run.progress

    def test_default_config(self, tmp_path_home):  # pylint: disable=unused-argument
        self._assert_defaults(config.get_default_config())

    def test_default_config_file(self, tmp_path_home):
        assert config.DEFAULTS.CONFIG_FILE == os.path.join(
            tmp_path_home, ".config", "samsde", "config.yaml"
        )

    def test_config_file_from_env(self, tmp_path_home, monkeypatch):
        monkeypatch.setenv(config.DEFAULTS.SAMSDE_CONFIG, str(tmp_path_home / "alt.yaml"))
        assert config.DEFAULTS.CONFIG_FILE == str(tmp_path_home / "alt.yaml")

    def test_cfg_auto_fill(self, tmp_path_home):
        config_path = tmp_path_home / "config.yaml"
        config_path.write_text("general:\n  log_level: INFO\n", encoding="utf-8")
        self._assert_defaults(config.read_config(config_path))

    def test_empty_file(self, tmp_path_home):
        config_path = tmp_path_home / "config.yaml"
        config_path.write_text("", encoding="utf-8")
        self._assert_defaults(config.read_config(config_path))

    def test_modified_settings(self, tmp_path_home):
        config_path = tmp_path_home / "config.yaml"
        config_path.write_text(
            """general:
  log_level: debug
run:
  threads: 4
  plots: false
  results_dir: $HOME/experiments
""",
            encoding="utf-8",
        )
        cfg = config.read_config(config_path)
        assert cfg.general.log_level == "DEBUG"
        assert cfg.general.debug_level == 1
        assert cfg.run.threads == 4
        assert not cfg.run.plots
        assert cfg.run.results_dir == f"{tmp_path_home}/experiments"

    @pytest.mark.parametrize(
        "content",
        ["run:\n  threads: 0\n", "general:\n  log_level: LOUD\n", "- a\n- b\n", "run: [\n"],
    )
    def test_invalid(self, tmp_path_home, content):
        config_path = tmp_path_home / "config.yaml"
        config_path.write_text(content, encoding="utf-8")
        with pytest.raises(config.ConfigException):
            config.read_config(config_path)

    def test_validate_log_level(self):
        cfg = config.get_default_config()
        with pytest.raises(ValueError):
            cfg.general.validate_log_level("INVALID")
        for level in ("DEBUG", "INFO", "WARNING", "WARN", "FATAL", "CRITICAL", "ERROR"):
            assert cfg.general.validate_log_level(level.lower()) == level

    def test_write_and_read(self, tmp_path_home):
        cfg = config.get_default_config()
        cfg.run.threads = 3
        config_file = tmp_path_home / "nested" / "config.yaml"
        config.write_config(cfg, str(config_file))
        assert config.read_config(config_file) == cfg
        text = config_file.read_text(encoding="utf-8")
        assert "# Worker threads for ensemble chunks." in text
        assert "# Default: 1" in text


class TestExperimentConfig:
    def test_minimal(self):
        cfg = config.experiment_config_from_dict({"experiment": {"kind": "suboptimality"}})
        assert cfg.seed == 0
        assert cfg.chunk_size == 256
        assert cfg.output.every == 1
        assert cfg.output.dir is None
        assert isinstance(cfg.experiment, SuboptimalityParams)

    def test_nested_oracle_and_aliases(self):
        cfg = config.experiment_config_from_dict(
            {
                "seed": 5,
                "experiment": {
                    "kind": "validate-sde",
                    "oracle": {"kind": "minibatch", "batch_size": 4},
                    "algorithms": ["usam", "dnpsam"],
                },
            }
        )
        params = cfg.experiment
        assert isinstance(params, ValidateSdeParams)
        assert params.oracle == Minibatch(batch_size=4)
        assert params.algorithms == [Variant.USAM, Variant.PDNSAM]

    @pytest.mark.parametrize(
        "content,fragment",
        [
            ({}, "experiment"),
            ({"experiment": {"kind": "nope"}}, "experiment"),
            ({"experiment": {"kind": "suboptimality", "stepz": 3}}, "stepz"),
            ({"experiment": {"kind": "suboptimality", "steps": 10, "burn_in": 10}}, "burn_in"),
            ({"experiment": {"kind": "saddle-escape-highdim", "dim": 4}}, "n_negative"),
            ({"experiment": {"kind": "interplay-rho", "optimizer": "adam"}}, "adam"),
            ({"seed": 1, "colour": "red", "experiment": {"kind": "suboptimality"}}, "colour"),
        ],
    )
    def test_invalid(self, content, fragment):
        with pytest.raises(config.ConfigException, match=fragment):
            config.experiment_config_from_dict(content, source="exp.yaml")

    def test_paper_scale_keeps_explicit_fields(self):
        cfg = config.experiment_config_from_dict(
            {"experiment": {"kind": "validate-sde", "runs": 7}}, paper_scale=True
        )
        assert cfg.experiment.runs == 7
        assert cfg.experiment.repeats == 3
        assert cfg.experiment.depth == 20

    def test_rho_defaults_to_sqrt_eta(self):
        params = SaddleEscape2dParams(eta=0.04)
        assert params.rho_value == pytest.approx(0.2)
        assert SaddleEscape2dParams(eta=0.04, rho=0.5).rho_value == 0.5
        assert params.noise_for(Variant.SAM) == 0.0
        assert params.noise_for(Variant.PSAM) == 0.01

    def test_read_file(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text(
            "seed: 3\noutput:\n  every: 10\nexperiment:\n  kind: saddle-escape-2d\n  x0: [0.0, 0.5]\n",
            encoding="utf-8",
        )
        cfg = config.read_experiment_config(path)
        assert cfg.seed == 3
        assert cfg.output.every == 10
        assert cfg.experiment.x0 == (0.0, 0.5)

    def test_read_missing_file(self, tmp_path):
        with pytest.raises(config.ConfigException, match="cannot read"):
            config.read_experiment_config(tmp_path / "missing.yaml")

    @pytest.mark.parametrize("kind", list(REGISTRY))
    def test_resolved_round_trip(self, kind, tmp_path):
        cfg = config.ExperimentConfig(seed=11, experiment=REGISTRY[kind].default_params())
        path = tmp_path / config.RESOLVED_FILENAME
        config.write_config_to_yaml(cfg, path)
        assert config.read_experiment_config(path) == cfg

    def test_dump_is_commented(self):
        cfg = config.ExperimentConfig(experiment=SuboptimalityParams())
        stream = io.StringIO()
        config.dump_config(cfg, stream)
        text = stream.getvalue()
        assert "# Leading iterations excluded from the long-run mean." in text
        assert "# Default: 5000" in text
        assert load_yaml(text)["experiment"]["kind"] == "suboptimality"


@pytest.mark.parametrize(
    "log_level,debug_level,root,samsde,matplotlib",
    [
        ("INFO", 0, logging.INFO, logging.INFO, logging.WARNING),
        ("DEBUG", 1, logging.INFO, logging.DEBUG, logging.WARNING),
        ("DEBUG", 2, logging.DEBUG, logging.DEBUG, logging.DEBUG),
        ("ERROR", 0, logging.ERROR, logging.ERROR, logging.WARNING),
    ],
)
def test_logging(log_level, debug_level, root, samsde, matplotlib):
    configure_logging(log_level=log_level, debug_level=debug_level)
    assert logging.getLogger("root").getEffectiveLevel() == root
    assert logging.getLogger("samsde").getEffectiveLevel() == samsde
    assert logging.getLogger("matplotlib").getEffectiveLevel() == matplotlib


def _fields_without_description(cfg: pydantic.BaseModel) -> list[str]:
    missing = []
    for field_name, field in type(cfg).model_fields.items():
        value = getattr(cfg, field_name)
        if isinstance(value, pydantic.BaseModel):
            missing.extend(_fields_without_description(value))
        if not field.description and field_name != "kind":
            missing.append(f"{type(cfg).__name__}.{field_name}")
    return missing


def test_all_config_options_have_description():
    missing = _fields_without_description(config.get_default_config())
    for experiment in REGISTRY.values():
        exp_cfg = config.ExperimentConfig(experiment=experiment.default_params())
        missing.extend(_fields_without_description(exp_cfg))
    assert not missing, f"Fields without description: {sorted(set(missing))}"


class NestedConfig(BaseModel):
    nested_field: str = Field(
        default="nested_default", description="Nested field description"
    )


class Config(BaseModel):
    field: str = Field(default="default_value", description="Field description")
    nested: NestedConfig = NestedConfig()


@pytest.mark.parametrize(
    "cfg, config_identifier, expected_description, expected_default_value, expect_error",
    [
        (Config(), ["field"], "Field description", "default_value", False),
        (
            Config(),
            ["nested", "nested_field"],
            "Nested field description",
            "nested_default",
            False,
        ),
        (Config(), ["non_existent_field"], None, None, True),
        (Config(), ["nested", "non_existent_field"], None, None, True),
        (config.get_default_config(), ["run", "threads"], "Worker threads for ensemble chunks.", 1, False),
    ],
)
def test_get_default_and_description(
    cfg, config_identifier, expected_description, expected_default_value, expect_error
):
    if expect_error:
        with pytest.raises(ValueError):
            get_default_and_description(cfg, config_identifier)
    else:
        description, default_value = get_default_and_description(cfg, config_identifier)
        assert description == expected_description
        assert default_value == expected_default_value


@pytest.mark.parametrize(
    "param_decls, help_text, show_default, should_raise",
    [
        # help text comes from the Field description
        (["--test"], "This is a test help message", False, True),
        (["--test"], None, False, False),
        (["--test"], None, True, True),
    ],
)
def test_click_option(param_decls, help_text, show_default, should_raise):
    if should_raise:
        with pytest.raises(ValueError):
            ConfigOption(param_decls=param_decls, help=help_text, show_default=show_default)
    else:
        ConfigOption(param_decls=param_decls, help=help_text, show_default=show_default)
