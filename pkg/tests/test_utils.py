# SPDX-License-Identifier: Apache-2.0

# Third Party
import numpy as np
import pytest

# First Party
from samsde import utils


class TestUtils:
    """Test collection in samsde.utils."""

    def test_print_table(self, capsys):
        utils.print_table(["Kind", "Runs"], [["suboptimality", 256], ["stationary-ball", 10]])
        lines = capsys.readouterr().out.splitlines()
        assert lines == [
            "+-----------------+------+",
            "| Kind            | Runs |",
            "+-----------------+------+",
            "| suboptimality   | 256  |",
            "| stationary-ball | 10   |",
            "+-----------------+------+",
        ]

    @pytest.mark.parametrize(
        "value,expected",
        [
            (True, "true"),
            (False, "false"),
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (1e-20, "9.9999999999999995e-21"),
            (float("nan"), "nan"),
            (float("inf"), "inf"),
            (float("-inf"), "-inf"),
            (np.float64(0.5), "0.5"),
            (np.int64(3), "3"),
            (np.bool_(True), "true"),
            (42, "42"),
            ("SAM", "SAM"),
        ],
    )
    def test_format_value(self, value, expected):
        assert utils.format_value(value) == expected

    def test_format_value_round_trips(self):
        value = 1.0 / 3.0
        assert float(utils.format_value(value)) == value
