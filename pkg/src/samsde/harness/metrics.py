# SPDX-License-Identifier: Apache-2.0
"""Test functions, weak error and saddle-behavior metrics"""

# Standard
import dataclasses
import enum
import math
import typing

# Third Party
import numpy as np
import numpy.typing as npt

# First Party
from samsde.core.errors import LengthMismatchError
from samsde.models.base import LossModel

if typing.TYPE_CHECKING:
    # First Party
    from samsde.harness.ensemble import EnsembleStats

TestFunction = typing.Callable[[np.ndarray, LossModel], np.ndarray]


def test_g1(x: npt.ArrayLike, model: LossModel) -> np.ndarray:
    """‖x‖ + ‖∇f(x)‖"""
    xs = np.asarray(x, dtype=float)
    return np.linalg.norm(xs, axis=-1) + np.linalg.norm(model.grad(xs), axis=-1)


def test_g2(x: npt.ArrayLike, model: LossModel) -> np.ndarray:
    """f(x)"""
    return np.asarray(model.value(x), dtype=float)


# keep pytest from collecting these as tests
test_g1.__test__ = False  # type: ignore[attr-defined]
test_g2.__test__ = False  # type: ignore[attr-defined]

TEST_FUNCTIONS: dict[str, TestFunction] = {"g1": test_g1, "g2": test_g2}


class WeakError(typing.NamedTuple):
    value: float
    step: int
    se: float


def weak_error_report(a: "EnsembleStats", b: "EnsembleStats", name: str) -> WeakError:
    """max_k |mean_a(k) − mean_b(k)|, where it happens and the combined SE there"""
    mean_a, mean_b = a.mean[name], b.mean[name]
    if mean_a.shape != mean_b.shape:
        raise LengthMismatchError(len(mean_a), len(mean_b))
    diff = np.abs(mean_a - mean_b)
    if np.any(np.isnan(diff)):
        return WeakError(math.nan, int(np.flatnonzero(np.isnan(diff))[0]), math.nan)
    k = int(np.argmax(diff))
    se = math.hypot(float(a.se[name][k]), float(b.se[name][k]))
    return WeakError(float(diff[k]), k, se)


def weak_error(a: "EnsembleStats", b: "EnsembleStats", name: str) -> float:
    return weak_error_report(a, b, name).value


def _distances(x: np.ndarray, center: np.ndarray | None) -> np.ndarray:
    if center is not None:
        x = x - center
    with np.errstate(invalid="ignore", over="ignore"):
        dist = np.linalg.norm(x, axis=-1)
    return np.where(np.isnan(dist), np.inf, dist)


class Observer(typing.Protocol):
    def update(self, k: int, x: np.ndarray) -> None: ...


@dataclasses.dataclass
class BallOccupancy:
    """Per-step in/out bookkeeping for a ball of radius r around ``center``

    ``entries[k]``/``exits[k]`` count trajectories whose inside-indicator
    switched on/off at step k.
    """

    radius: float
    n_traj: int
    steps: int
    center: np.ndarray | None = None
    inside: np.ndarray = dataclasses.field(init=False)
    entries: np.ndarray = dataclasses.field(init=False)
    exits: np.ndarray = dataclasses.field(init=False)
    first_entry: np.ndarray = dataclasses.field(init=False)
    _prev: np.ndarray | None = dataclasses.field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"radius must be > 0, got {self.radius}")
        self.inside = np.zeros(self.steps + 1, dtype=np.int64)
        self.entries = np.zeros(self.steps + 1, dtype=np.int64)
        self.exits = np.zeros(self.steps + 1, dtype=np.int64)
        self.first_entry = np.full(self.n_traj, -1, dtype=np.int64)

    def update(self, k: int, x: np.ndarray) -> None:
        now = _distances(np.atleast_2d(x), self.center) <= self.radius
        self.inside[k] = np.count_nonzero(now)
        self.first_entry[(self.first_entry < 0) & now] = k
        if self._prev is not None:
            self.entries[k] = np.count_nonzero(now & ~self._prev)
            self.exits[k] = np.count_nonzero(~now & self._prev)
        self._prev = now

    @property
    def jumps(self) -> np.ndarray:
        return self.entries + self.exits

    @property
    def outside(self) -> np.ndarray:
        return self.n_traj - self.inside

    @property
    def entered_fraction(self) -> float:
        return float(np.count_nonzero(self.first_entry >= 0)) / self.n_traj

    def window_sums(self, values: np.ndarray, window: int, start: int = 0) -> np.ndarray:
        """Sums of ``values[1:]`` over consecutive windows beginning at step start+1"""
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        tail = values[start + 1 :]
        count = len(tail) // window
        return tail[: count * window].reshape(count, window).sum(axis=1)

    def window_means(self, values: np.ndarray, window: int, start: int = 0) -> np.ndarray:
        return self.window_sums(values, window, start) / window

    @classmethod
    def merge(cls, parts: list["BallOccupancy"]) -> "BallOccupancy":
        first = parts[0]
        out = cls(first.radius, sum(p.n_traj for p in parts), first.steps, first.center)
        out.inside = np.sum([p.inside for p in parts], axis=0)
        out.entries = np.sum([p.entries for p in parts], axis=0)
        out.exits = np.sum([p.exits for p in parts], axis=0)
        out.first_entry = np.concatenate([p.first_entry for p in parts])
        return out


def ball_occupancy(
    paths: npt.ArrayLike, radius: float, center: npt.ArrayLike | None = None
) -> BallOccupancy:
    """Occupancy of stored trajectories, ``paths`` shaped (R, N+1, d)"""
    arr = np.asarray(paths, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    occ = BallOccupancy(
        radius, arr.shape[0], arr.shape[1] - 1, None if center is None else np.asarray(center)
    )
    for k in range(arr.shape[1]):
        occ.update(k, arr[:, k])
    return occ


class Outcome(str, enum.Enum):
    STUCK = "stuck"
    ESCAPED = "escaped"
    RETURNED = "returned"


@dataclasses.dataclass
class EscapeMetrics:
    """Stuck/escaped/returned classification relative to a critical point

    Escaped: final distance above ``far``. Stuck: never farther than the
    start distance plus ``near``. Returned: everything else.
    """

    far: float
    near: float
    n_traj: int
    steps: int
    center: np.ndarray | None = None
    final_distance: np.ndarray = dataclasses.field(init=False)
    max_distance: np.ndarray = dataclasses.field(init=False)
    first_escape: np.ndarray = dataclasses.field(init=False)
    start_distance: np.ndarray = dataclasses.field(init=False)
    mean_distance: np.ndarray = dataclasses.field(init=False)

    def __post_init__(self) -> None:
        if not 0 < self.near < self.far:
            raise ValueError(
                f"thresholds must satisfy 0 < near < far, got near={self.near}, far={self.far}"
            )
        self.final_distance = np.zeros(self.n_traj)
        self.max_distance = np.zeros(self.n_traj)
        self.first_escape = np.full(self.n_traj, -1, dtype=np.int64)
        self.start_distance = np.zeros(self.n_traj)
        self.mean_distance = np.zeros(self.steps + 1)

    def update(self, k: int, x: np.ndarray) -> None:
        dist = _distances(np.atleast_2d(x), self.center)
        if k == 0:
            self.start_distance = dist
        self.final_distance = dist
        self.max_distance = np.maximum(self.max_distance, dist)
        self.first_escape[(self.first_escape < 0) & (dist > self.far)] = k
        with np.errstate(invalid="ignore"):
            self.mean_distance[k] = dist.mean()

    @property
    def outcomes(self) -> list[Outcome]:
        result = []
        for final, peak, start in zip(
            self.final_distance, self.max_distance, self.start_distance, strict=True
        ):
            if final > self.far:
                result.append(Outcome.ESCAPED)
            elif peak <= start + self.near:
                result.append(Outcome.STUCK)
            else:
                result.append(Outcome.RETURNED)
        return result

    def counts(self) -> dict[Outcome, int]:
        outcomes = self.outcomes
        return {o: outcomes.count(o) for o in Outcome}

    @classmethod
    def merge(cls, parts: list["EscapeMetrics"]) -> "EscapeMetrics":
        first = parts[0]
        total = sum(p.n_traj for p in parts)
        out = cls(first.far, first.near, total, first.steps, first.center)
        out.final_distance = np.concatenate([p.final_distance for p in parts])
        out.max_distance = np.concatenate([p.max_distance for p in parts])
        out.first_escape = np.concatenate([p.first_escape for p in parts])
        out.start_distance = np.concatenate([p.start_distance for p in parts])
        with np.errstate(invalid="ignore"):
            out.mean_distance = (
                np.sum([p.mean_distance * p.n_traj for p in parts], axis=0) / total
            )
        return out


def default_escape_thresholds(x0: npt.ArrayLike) -> tuple[float, float]:
    """(far, near) = (10·‖x0‖, 0.1·‖x0‖)"""
    norm = float(np.linalg.norm(np.asarray(x0, dtype=float)))
    if norm == 0:
        raise ValueError("x0 at the critical point has no default escape thresholds")
    return 10.0 * norm, 0.1 * norm


def escape_metrics(
    paths: npt.ArrayLike,
    threshold_far: float,
    threshold_near: float,
    center: npt.ArrayLike | None = None,
) -> EscapeMetrics:
    """Classify stored trajectories, ``paths`` shaped (R, N+1, d)"""
    arr = np.asarray(paths, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    metrics = EscapeMetrics(
        threshold_far,
        threshold_near,
        arr.shape[0],
        arr.shape[1] - 1,
        None if center is None else np.asarray(center),
    )
    for k in range(arr.shape[1]):
        metrics.update(k, arr[:, k])
    return metrics
