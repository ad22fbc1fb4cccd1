# SPDX-License-Identifier: Apache-2.0
"""Ensembles of discrete or SDE trajectories

Trajectories are advanced together in chunks of ``chunk_size`` rows, but
run r of series s draws only from its own ``RngStream(base_seed, s·2³² + r)``.
A trajectory is therefore the same for any chunk size or thread count.
Per-step statistics are merged across chunks in chunk order.
"""

# Standard
from concurrent.futures import ThreadPoolExecutor
import dataclasses
import logging
import math
import typing

# Third Party
from tqdm import tqdm
import numpy as np
import numpy.typing as npt

# First Party
from samsde import optim
from samsde.core.rng import RngStream, RunGenerators
from samsde.harness.metrics import TEST_FUNCTIONS, TestFunction
from samsde.models.base import LossModel
from samsde.models.oracle import AdditiveGaussian, Minibatch
from samsde.sde import SdeConfig, SdeSystem, em_step

logger = logging.getLogger(__name__)

X0Sampler = typing.Callable[[np.random.Generator, int], np.ndarray]
ObserverFactory = typing.Callable[[int, int], typing.Any]
Advance = typing.Callable[[np.ndarray, np.random.Generator], np.ndarray]


@dataclasses.dataclass(frozen=True)
class EnsembleSpec:
    runs: int
    steps: int
    x0: npt.ArrayLike | X0Sampler
    base_seed: int = 0
    series: int = 0
    chunk_size: int = 256
    threads: int = 1
    keep_terminal: bool = False
    progress: bool = False

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.chunk_size < 1 or self.threads < 1:
            raise ValueError("chunk_size and threads must be >= 1")

    def stream(self, run: int) -> RngStream:
        return RngStream(self.base_seed, (self.series << 32) + run)


@dataclasses.dataclass
class EnsembleStats:
    mean: dict[str, np.ndarray]
    se: dict[str, np.ndarray]
    runs: int
    terminal: np.ndarray | None = None
    divergences: dict[int, int] = dataclasses.field(default_factory=dict)
    observers: dict[str, typing.Any] = dataclasses.field(default_factory=dict)

    def __len__(self) -> int:
        return len(next(iter(self.mean.values())))

    @property
    def diverged(self) -> bool:
        return bool(self.divergences)


@dataclasses.dataclass
class _ChunkResult:
    count: int
    mean: dict[str, np.ndarray]
    m2: dict[str, np.ndarray]
    terminal: np.ndarray | None
    divergences: dict[int, int]
    observers: dict[str, typing.Any]


def _initial(ens: EnsembleSpec, gen: RunGenerators, n: int) -> np.ndarray:
    if callable(ens.x0):
        return np.array(ens.x0(typing.cast(np.random.Generator, gen), n), dtype=float)
    x0 = np.asarray(ens.x0, dtype=float)
    return np.array(np.broadcast_to(x0, (n,) + x0.shape[-1:]))


def _run_chunk(
    chunk: int,
    advance: Advance,
    model: LossModel,
    ens: EnsembleSpec,
    tests: dict[str, TestFunction],
    observers: dict[str, ObserverFactory],
) -> _ChunkResult:
    offset = chunk * ens.chunk_size
    n = min(ens.chunk_size, ens.runs - offset)
    gens = RunGenerators.from_streams(ens.stream(offset + i) for i in range(n))
    gen = typing.cast(np.random.Generator, gens)
    x = _initial(ens, gens, n)
    mean = {name: np.empty(ens.steps + 1) for name in tests}
    m2 = {name: np.empty(ens.steps + 1) for name in tests}
    watchers = {name: factory(n, ens.steps) for name, factory in observers.items()}
    divergences: dict[int, int] = {}
    alive = np.ones(n, dtype=bool)

    def record(k: int) -> None:
        for name, fn in tests.items():
            vals = fn(x, model)
            mu = vals.mean()
            mean[name][k] = mu
            m2[name][k] = np.sum((vals - mu) ** 2)
        for watcher in watchers.values():
            watcher.update(k, x)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        record(0)
        for k in range(1, ens.steps + 1):
            x = advance(x, gen)
            finite = np.all(np.isfinite(x), axis=-1)
            newly = alive & ~finite
            if np.any(newly):
                for i in np.flatnonzero(newly):
                    divergences[offset + int(i)] = k
                alive &= finite
            record(k)
    return _ChunkResult(
        n, mean, m2, x.copy() if ens.keep_terminal else None, divergences, watchers
    )


def _merge(parts: list[_ChunkResult], names: list[str]) -> tuple[dict, dict, int]:
    count = parts[0].count
    mean = {name: parts[0].mean[name].copy() for name in names}
    m2 = {name: parts[0].m2[name].copy() for name in names}
    for part in parts[1:]:
        total = count + part.count
        for name in names:
            delta = part.mean[name] - mean[name]
            mean[name] = mean[name] + delta * (part.count / total)
            m2[name] = m2[name] + part.m2[name] + delta**2 * (count * part.count / total)
        count = total
    return mean, m2, count


def run_ensemble(
    advance: Advance,
    model: LossModel,
    ens: EnsembleSpec,
    g: dict[str, TestFunction] | None = None,
    observers: dict[str, ObserverFactory] | None = None,
) -> EnsembleStats:
    """Advance R trajectories N steps and aggregate the test functions"""
    tests = dict(TEST_FUNCTIONS if g is None else g)
    watchers = dict(observers or {})
    n_chunks = math.ceil(ens.runs / ens.chunk_size)

    def job(chunk: int) -> _ChunkResult:
        return _run_chunk(chunk, advance, model, ens, tests, watchers)

    with ThreadPoolExecutor(max_workers=min(ens.threads, n_chunks)) as pool:
        results = list(
            tqdm(
                pool.map(job, range(n_chunks)),
                total=n_chunks,
                desc="chunks",
                disable=not ens.progress,
                leave=False,
            )
        )

    names = list(tests)
    mean, m2, count = _merge(results, names)
    if count > 1:
        se = {name: np.sqrt(m2[name] / (count - 1) / count) for name in names}
    else:
        se = {name: np.zeros_like(mean[name]) for name in names}
    divergences: dict[int, int] = {}
    for part in results:
        divergences.update(part.divergences)
    if divergences:
        logger.warning(
            "%d of %d trajectories diverged (first at step %d)",
            len(divergences),
            count,
            min(divergences.values()),
        )
    terminal = None
    if ens.keep_terminal:
        terminal = np.concatenate([typing.cast(np.ndarray, p.terminal) for p in results])
    merged = {}
    for name in watchers:
        parts = [p.observers[name] for p in results]
        merged[name] = type(parts[0]).merge(parts)
    return EnsembleStats(mean, se, count, terminal, divergences, merged)


def run_discrete_ensemble(
    spec: optim.OptimizerSpec,
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    ens: EnsembleSpec,
    g: dict[str, TestFunction] | None = None,
    observers: dict[str, ObserverFactory] | None = None,
) -> EnsembleStats:
    def advance(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        return optim.step(spec, model, oracle, x, gen)

    return run_ensemble(advance, model, ens, g, observers)


def run_sde_ensemble(
    sys: SdeSystem,
    cfg: SdeConfig | None,
    ens: EnsembleSpec,
    g: dict[str, TestFunction] | None = None,
    observers: dict[str, ObserverFactory] | None = None,
    model: LossModel | None = None,
) -> EnsembleStats:
    model = model or sys.model
    if model is None:
        raise ValueError("SDE system has no model; pass one for the test functions")
    substeps = cfg.substeps if cfg is not None else 1
    dt = sys.eta / substeps

    def advance(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        for _ in range(substeps):
            x = em_step(sys, x, dt, gen)
        return x

    return run_ensemble(advance, model, ens, g, observers)
