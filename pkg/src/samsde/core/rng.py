# SPDX-License-Identifier: Apache-2.0
"""Reproducible, splittable random streams"""

# Standard
import dataclasses
import math
import typing

# Third Party
import numpy as np

_MASK64 = (1 << 64) - 1


@dataclasses.dataclass(frozen=True)
class RngStream:
    """Identifies one independent random sequence

    Streams are addressed by ``(base_seed, stream_index)``. The stream index
    becomes a ``SeedSequence`` spawn key and the bits come from the
    counter-based Philox generator, so streams can be created in any order
    and on any thread.
    """

    base_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        # normalise negative seeds into the unsigned 64-bit range
        object.__setattr__(self, "base_seed", int(self.base_seed) & _MASK64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream"""
        seq = np.random.SeedSequence(
            entropy=self.base_seed, spawn_key=(self.stream_index,)
        )
        return np.random.Generator(np.random.Philox(seq))

    def child(self, index: int) -> "RngStream":
        """Derive a sub-stream, e.g. one per series of an experiment"""
        return RngStream(self.base_seed, (self.stream_index << 32) + int(index))


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


class RunGenerators:
    """Per-trajectory generators behind a batched draw interface

    Row i of every draw comes from generator i, so a trajectory sees the
    same numbers whichever rows share its batch. Every ``size`` must lead
    with the number of rows. Normals are read ahead ``block`` at a time per
    row and handed out in order.
    """

    def __init__(
        self, generators: typing.Sequence[np.random.Generator], block: int = 4096
    ) -> None:
        if not generators:
            raise ValueError("need at least one generator")
        if block < 1:
            raise ValueError(f"block must be >= 1, got {block}")
        self.generators = list(generators)
        self.block = block
        self._normals = np.empty((len(self.generators), 0))
        self._pos = 0

    @classmethod
    def from_streams(
        cls, streams: typing.Iterable[RngStream], block: int = 4096
    ) -> "RunGenerators":
        return cls([stream.generator() for stream in streams], block)

    def __len__(self) -> int:
        return len(self.generators)

    def _row_shape(self, size: int | typing.Sequence[int] | None) -> tuple[int, ...]:
        shape = (size,) if isinstance(size, int) else tuple(size or ())
        if not shape or shape[0] != len(self):
            raise ValueError(
                f"draw of shape {shape} does not lead with {len(self)} rows"
            )
        return shape[1:]

    def _refill(self, count: int) -> None:
        left = self._normals[:, self._pos :]
        fresh = max(self.block, count - left.shape[1])
        drawn = np.stack([g.standard_normal(fresh) for g in self.generators])
        self._normals = np.concatenate([left, drawn], axis=1)
        self._pos = 0

    def standard_normal(self, size: int | typing.Sequence[int] | None = None) -> np.ndarray:
        rest = self._row_shape(size)
        count = math.prod(rest)
        if self._pos + count > self._normals.shape[1]:
            self._refill(count)
        out = self._normals[:, self._pos : self._pos + count]
        self._pos += count
        return np.array(out).reshape((len(self),) + rest)

    def integers(
        self,
        low: int,
        high: int | None = None,
        size: int | typing.Sequence[int] | None = None,
    ) -> np.ndarray:
        rest = self._row_shape(size)
        return np.stack([np.asarray(g.integers(low, high, size=rest)) for g in self.generators])
