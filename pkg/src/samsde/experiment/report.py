# SPDX-License-Identifier: Apache-2.0
"""Tables and plots of one experiment run

A Report collects per-iteration series, scalar summary entries, extra
tables and plot definitions while an experiment runs and writes them all at
the end:

    results.csv     iteration,series,mean,se
    summary.csv     key,value
    table-<n>.csv   free-form tables
    terminal.csv    terminal point cloud, if any
    plot-<n>.svg    line charts
"""

# Standard
import csv
import dataclasses
import logging
import os
import typing

# Third Party
from matplotlib.figure import Figure
import matplotlib
import numpy as np
import numpy.typing as npt

# First Party
from samsde.harness.ensemble import EnsembleStats
from samsde.utils import format_value

logger = logging.getLogger(__name__)

# fixed ids keep the SVG output byte-identical between runs
_SVG_RC = {"svg.hashsalt": "samsde", "svg.fonttype": "path"}


@dataclasses.dataclass
class Series:
    name: str
    iterations: np.ndarray
    mean: np.ndarray
    se: np.ndarray


@dataclasses.dataclass
class Plot:
    name: str
    series: list[str]
    title: str = ""
    ylabel: str = ""
    xlabel: str = "iteration"
    logy: bool = False


@dataclasses.dataclass
class Table:
    headers: list[str]
    rows: list[list[typing.Any]]


class Report:
    def __init__(self, kind: str) -> None:
        self.kind = kind
        self.series: dict[str, Series] = {}
        self.summary: dict[str, typing.Any] = {}
        self.tables: dict[str, Table] = {}
        self.plots: list[Plot] = []
        self.terminal: np.ndarray | None = None

    def add_series(
        self,
        name: str,
        mean: npt.ArrayLike,
        se: npt.ArrayLike | None = None,
        iterations: npt.ArrayLike | None = None,
    ) -> None:
        if name in self.series:
            raise ValueError(f"duplicate series {name!r}")
        m = np.asarray(mean, dtype=float)
        s = np.zeros_like(m) if se is None else np.asarray(se, dtype=float)
        its = np.arange(len(m)) if iterations is None else np.asarray(iterations)
        if not len(m) == len(s) == len(its):
            raise ValueError(f"series {name!r}: mean, se and iterations differ in length")
        self.series[name] = Series(name, its, m, s)

    def add_stats(
        self, prefix: str, stats: EnsembleStats, names: typing.Iterable[str] | None = None
    ) -> list[str]:
        """Add one series ``<prefix>/<g>`` per test function of an ensemble"""
        added = []
        for g in names if names is not None else stats.mean:
            name = f"{prefix}/{g}"
            self.add_series(name, stats.mean[g], stats.se[g])
            added.append(name)
        if stats.divergences:
            self.add_summary(f"{prefix}/diverged", len(stats.divergences))
            self.add_summary(
                f"{prefix}/first_divergence", min(stats.divergences.values())
            )
        return added

    def add_summary(self, key: str, value: typing.Any) -> None:
        self.summary[key] = value
        logger.info("%s: %s = %s", self.kind, key, format_value(value))

    def add_table(
        self, name: str, headers: list[str], rows: list[list[typing.Any]]
    ) -> None:
        for row in rows:
            if len(row) != len(headers):
                raise ValueError(f"table {name!r}: row {row!r} does not match headers")
        self.tables[name] = Table(list(headers), [list(r) for r in rows])

    def add_plot(self, name: str, series: list[str], **kwargs: typing.Any) -> None:
        missing = [s for s in series if s not in self.series]
        if missing:
            raise ValueError(f"plot {name!r} references unknown series {missing}")
        self.plots.append(Plot(name, list(series), **kwargs))

    def set_terminal(self, points: npt.ArrayLike) -> None:
        self.terminal = np.atleast_2d(np.asarray(points, dtype=float))

    def write(
        self, out_dir: str | os.PathLike[str], *, every: int = 1, plots: bool = True
    ) -> list[str]:
        """Write every collected artifact into out_dir, returns the paths written"""
        os.makedirs(out_dir, exist_ok=True)
        written = [self._write_results(out_dir, every), self._write_summary(out_dir)]
        for name, table in self.tables.items():
            path = os.path.join(out_dir, f"table-{name}.csv")
            _write_csv(path, table.headers, table.rows)
            written.append(path)
        if self.terminal is not None:
            path = os.path.join(out_dir, "terminal.csv")
            headers = [f"x{i}" for i in range(self.terminal.shape[1])]
            _write_csv(path, headers, self.terminal.tolist())
            written.append(path)
        if plots:
            for plot in self.plots:
                written.append(self._write_plot(out_dir, plot))
        logger.debug("wrote %s", ", ".join(written))
        return written

    def _write_results(self, out_dir: str | os.PathLike[str], every: int) -> str:
        path = os.path.join(out_dir, "results.csv")
        rows = []
        for s in self.series.values():
            last = len(s.mean) - 1
            for i, it in enumerate(s.iterations):
                if i % every == 0 or i == last:
                    rows.append([int(it), s.name, float(s.mean[i]), float(s.se[i])])
        _write_csv(path, ["iteration", "series", "mean", "se"], rows)
        return path

    def _write_summary(self, out_dir: str | os.PathLike[str]) -> str:
        path = os.path.join(out_dir, "summary.csv")
        _write_csv(path, ["key", "value"], [[k, v] for k, v in self.summary.items()])
        return path

    def _write_plot(self, out_dir: str | os.PathLike[str], plot: Plot) -> str:
        path = os.path.join(out_dir, f"plot-{plot.name}.svg")
        with matplotlib.rc_context(_SVG_RC):
            fig = Figure(figsize=(8.2, 4.3))
            ax = fig.add_subplot()
            for name in plot.series:
                s = self.series[name]
                ax.plot(s.iterations, s.mean, label=name, linewidth=1.2)
                if np.any(s.se > 0):
                    ax.fill_between(
                        s.iterations, s.mean - s.se, s.mean + s.se, alpha=0.2
                    )
            if plot.logy:
                ax.set_yscale("log")
            ax.set_xlabel(plot.xlabel)
            ax.set_ylabel(plot.ylabel)
            ax.set_title(plot.title or plot.name)
            ax.grid(True, alpha=0.3)
            ax.legend(loc="best", fontsize="small")
            fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
        return path


def _write_csv(
    path: str | os.PathLike[str], headers: list[str], rows: list[list[typing.Any]]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
