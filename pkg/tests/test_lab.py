# SPDX-License-Identifier: Apache-2.0

# Standard
from importlib import metadata
import json
import pathlib
import re
import typing

# Third Party
from click.testing import CliRunner
from ruamel.yaml import YAML
import click
import pytest

# First Party
from samsde import configuration as config
from samsde import lab
from samsde.clickext import ConfigOption, get_default_and_description
from samsde.experiment.registry import REGISTRY
from samsde.experiment.run import output_dir

TINY_EXPERIMENT = """\
seed: 7
chunk_size: 2
experiment:
  kind: suboptimality
  dim: 2
  rhos: [0.0, 0.1]
  runs: 5
  steps: 30
  burn_in: 10
"""


def load_yaml(text: str) -> typing.Any:
    return YAML(typ="safe").load(text)


def write_experiment(text: str = TINY_EXPERIMENT, name: str = "exp.yaml") -> str:
    pathlib.Path(name).write_text(text, encoding="utf-8")
    return name


def _commands() -> dict[str, click.Command]:
    ctx = click.Context(lab.samsde)
    result = {}
    for name in lab.samsde.list_commands(ctx):
        cmd = lab.samsde.get_command(ctx, name)
        assert cmd is not None
        result[name] = cmd
    return result


def test_cli_params_hyphenated():
    flag_pattern = re.compile("-{1,2}[0-9a-z-]+")
    invalid_flags = []
    for name, cmd in _commands().items():
        for param in cmd.params:
            if not isinstance(param, click.Option):
                continue
            for opt in param.opts + param.secondary_opts:
                if not flag_pattern.fullmatch(opt):
                    invalid_flags.append(f"{name} {opt}")
    assert not invalid_flags, "<- these commands are using non-hyphenated params"


def test_commands_registered():
    eps = metadata.entry_points(group="samsde.command")
    assert set(eps.names) == {"list", "run", "show"}


@pytest.mark.parametrize("args", [[], ["list"], ["run"], ["show"]], ids=repr)
def test_samsde_cli_help(args: list[str], cli_runner: CliRunner):
    result = cli_runner.invoke(lab.samsde, [*args, "--help"])
    assert result.exit_code == 0, result.output
    assert "Usage:" in result.output


def test_cli_help_matches_field_description(cli_runner: CliRunner):
    result = cli_runner.invoke(lab.samsde, ["run", "--help"])
    assert result.exit_code == 0, result.output
    normalized = " ".join(result.output.split())
    cfg = config.get_default_config()
    for param in _commands()["run"].params:
        if not isinstance(param, ConfigOption):
            continue
        description, _ = get_default_and_description(cfg, ["run", str(param.name)])
        assert str(description) in normalized, normalized
        assert f"config: 'run.{param.name}'" in normalized


def test_did_you_mean(cli_runner: CliRunner):
    result = cli_runner.invoke(lab.samsde, ["rnu"])
    assert result.exit_code == 2
    assert "run" in result.output


@pytest.mark.parametrize(
    "args",
    [["list"], ["show", "suboptimality"], ["run", "exp.yaml"]],
    ids=repr,
)
def test_debug_params(args: list[str], cli_runner: CliRunner):
    write_experiment()
    result = cli_runner.invoke(lab.samsde, [*args, "--debug-params"])
    assert result.exit_code == 0, result.output
    assert "Parameters:" in result.output

    result = cli_runner.invoke(lab.samsde, [*args, "--debug-params-json"])
    assert result.exit_code == 0, result.output
    assert isinstance(json.loads(result.stdout), dict)


def test_list(cli_runner: CliRunner):
    result = cli_runner.invoke(lab.samsde, ["list"])
    assert result.exit_code == 0, result.output
    for kind in REGISTRY:
        assert kind in result.output
    assert "| Kind" in result.output
    assert "| Figures" in result.output
    assert "plot-inside.svg, plot-jumps.svg" in result.output
    assert "plot-rho=*-*-g1.svg" in result.output


class TestShow:
    @pytest.mark.parametrize("kind", list(REGISTRY))
    def test_template_is_valid(self, kind: str, cli_runner: CliRunner):
        result = cli_runner.invoke(lab.samsde, ["show", kind, "--seed", "3"])
        assert result.exit_code == 0, result.output
        content = load_yaml(result.stdout)
        assert content["experiment"]["kind"] == kind
        cfg = config.experiment_config_from_dict(content)
        assert cfg.seed == 3
        assert cfg.experiment == REGISTRY[kind].default_params()

    def test_paper_scale(self, cli_runner: CliRunner):
        result = cli_runner.invoke(lab.samsde, ["show", "validate-sde", "--paper-scale"])
        assert result.exit_code == 0, result.output
        assert load_yaml(result.stdout)["experiment"]["runs"] == 200

    def test_unknown_kind(self, cli_runner: CliRunner):
        result = cli_runner.invoke(lab.samsde, ["show", "fig-99"])
        assert result.exit_code == 2


class TestRun:
    def test_writes_outputs(self, cli_runner: CliRunner):
        write_experiment()
        result = cli_runner.invoke(lab.samsde, ["run", "exp.yaml", "--out", "out"])
        assert result.exit_code == 0, result.output
        assert "files to out" in result.output
        out = pathlib.Path("out")
        for name in (
            "results.csv",
            "summary.csv",
            "table-suboptimality.csv",
            "plot-loss.svg",
            config.RESOLVED_FILENAME,
        ):
            assert (out / name).is_file(), name
        results = (out / "results.csv").read_bytes()
        assert results.startswith(b"iteration,series,mean,se\r\n")
        resolved = config.read_experiment_config(out / config.RESOLVED_FILENAME)
        assert resolved.seed == 7
        assert resolved.experiment.runs == 5

    def test_reproducible_and_thread_independent(self, cli_runner: CliRunner):
        write_experiment()
        first = cli_runner.invoke(lab.samsde, ["run", "exp.yaml", "--out", "a", "--no-plots"])
        second = cli_runner.invoke(
            lab.samsde, ["run", "exp.yaml", "--out", "b", "--no-plots", "--threads", "3"]
        )
        assert first.exit_code == 0, first.output
        assert second.exit_code == 0, second.output
        for name in ("results.csv", "summary.csv", "table-suboptimality.csv"):
            assert (pathlib.Path("a") / name).read_bytes() == (
                pathlib.Path("b") / name
            ).read_bytes()
        assert not list(pathlib.Path("a").glob("*.svg"))

    def test_seed_override_changes_results(self, cli_runner: CliRunner):
        write_experiment()
        cli_runner.invoke(lab.samsde, ["run", "exp.yaml", "--out", "a", "--no-plots"])
        result = cli_runner.invoke(
            lab.samsde, ["run", "exp.yaml", "--out", "b", "--no-plots", "--seed", "8"]
        )
        assert result.exit_code == 0, result.output
        assert (pathlib.Path("a") / "results.csv").read_bytes() != (
            pathlib.Path("b") / "results.csv"
        ).read_bytes()
        resolved = config.read_experiment_config(pathlib.Path("b") / config.RESOLVED_FILENAME)
        assert resolved.seed == 8

    def test_default_output_dir(self, cli_runner: CliRunner, tmp_path_home: pathlib.Path):
        write_experiment()
        result = cli_runner.invoke(lab.samsde, ["run", "exp.yaml", "--no-plots"])
        assert result.exit_code == 0, result.output
        out = tmp_path_home / ".local" / "share" / "samsde" / "results" / "suboptimality-seed7"
        assert (out / "results.csv").is_file()

    def test_output_section(self, cli_runner: CliRunner):
        write_experiment(TINY_EXPERIMENT + "output:\n  dir: here\n  plots: false\n  every: 10\n")
        result = cli_runner.invoke(lab.samsde, ["run", "exp.yaml"])
        assert result.exit_code == 0, result.output
        assert not list(pathlib.Path("here").glob("*.svg"))
        lines = (pathlib.Path("here") / "results.csv").read_text(encoding="utf-8").splitlines()
        iterations = {int(line.split(",")[0]) for line in lines[1:]}
        assert iterations == {0, 10, 20, 30}

    def test_invalid_experiment(self, cli_runner: CliRunner):
        write_experiment("experiment:\n  kind: suboptimality\n  runs: -1\n")
        result = cli_runner.invoke(lab.samsde, ["run", "exp.yaml", "--out", "out"])
        assert result.exit_code == 1, result.output
        assert "Invalid experiment file" in result.output
        assert not pathlib.Path("out").exists()

    def test_runner_failure(self, cli_runner: CliRunner):
        write_experiment(
            """\
experiment:
  kind: validate-sde
  dim: 2
  oracle:
    kind: minibatch
  rhos: [0.1]
  algorithms: [USAM]
  runs: 2
  steps: 2
"""
        )
        result = cli_runner.invoke(lab.samsde, ["run", "exp.yaml", "--out", "out"])
        assert result.exit_code == 1, result.output
        assert "validate-sde failed" in result.output

    def test_missing_experiment_file(self, cli_runner: CliRunner):
        result = cli_runner.invoke(lab.samsde, ["run", "nope.yaml"])
        assert result.exit_code == 2

    def test_missing_config(self, cli_runner: CliRunner):
        write_experiment()
        result = cli_runner.invoke(
            lab.samsde, ["--config", "missing.yaml", "run", "exp.yaml", "--out", "out"]
        )
        assert result.exit_code == 2, result.output
        assert "does not exist or is not a readable file" in result.output

    def test_broken_config(self, cli_runner: CliRunner):
        write_experiment()
        pathlib.Path("settings.yaml").write_text("run:\n  threads: 0\n", encoding="utf-8")
        result = cli_runner.invoke(
            lab.samsde, ["--config", "settings.yaml", "run", "exp.yaml", "--out", "out"]
        )
        assert result.exit_code == 2, result.output
        assert "threads" in result.output

    def test_settings_file_defaults(self, cli_runner: CliRunner):
        write_experiment()
        pathlib.Path("settings.yaml").write_text(
            "run:\n  plots: false\n  results_dir: res\n", encoding="utf-8"
        )
        result = cli_runner.invoke(lab.samsde, ["--config", "settings.yaml", "run", "exp.yaml"])
        assert result.exit_code == 0, result.output
        out = pathlib.Path("res") / "suboptimality-seed7"
        assert (out / "results.csv").is_file()
        assert not list(out.glob("*.svg"))


def test_output_dir_precedence():
    cfg = config.experiment_config_from_dict(
        {"seed": 2, "experiment": {"kind": "interplay-rho"}}
    )
    assert output_dir(cfg, "res", None) == "res/interplay-rho-seed2"
    with_dir = cfg.model_copy(update={"output": cfg.output.model_copy(update={"dir": "mine"})})
    assert output_dir(with_dir, "res", None) == "mine"
    assert output_dir(with_dir, "res", "cli") == "cli"
