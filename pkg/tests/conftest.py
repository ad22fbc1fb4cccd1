# SPDX-License-Identifier: Apache-2.0
# pylint: disable=redefined-outer-name

# Standard
import os
import pathlib
import typing

# Third Party
from click.testing import CliRunner
import numpy as np
import pytest

TESTS_PATH = pathlib.Path(__file__).parent.absolute()


@pytest.fixture
def tmp_path_home(
    tmp_path: pathlib.Path, monkeypatch: pytest.MonkeyPatch
) -> typing.Generator[pathlib.Path, None, None]:
    """Point $HOME at tmp_path, without $XDG_* or $SAMSDE_CONFIG

    The settings and results directories move below tmp_path, and so does
    the default of the root ``--config`` option.
    """
    # First Party
    from samsde import lab
    from samsde.configuration import DEFAULTS

    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.delenv(DEFAULTS.SAMSDE_CONFIG, raising=False)
    for key in [k for k in os.environ if k.startswith("XDG_")]:
        monkeypatch.delenv(key)
    DEFAULTS._reset()

    config_option = next(p for p in lab.samsde.params if p.name == "config_file")
    monkeypatch.setattr(config_option, "default", DEFAULTS.CONFIG_FILE)
    yield tmp_path
    # restore $HOME before re-reading the defaults
    monkeypatch.undo()
    DEFAULTS._reset()


@pytest.fixture
def cli_runner(tmp_path_home: pathlib.Path) -> typing.Generator[CliRunner, None, None]:
    """CliRunner working in a fresh directory below the relocated $HOME"""
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=tmp_path_home):
        yield runner


@pytest.fixture
def testdata_path() -> pathlib.Path:
    return TESTS_PATH / "testdata"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
