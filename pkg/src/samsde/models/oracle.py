# SPDX-License-Identifier: Apache-2.0
"""Stochastic gradient oracles

An oracle draw fixes one realization γ of the gradient noise and can then
evaluate ∇f_γ at any point. SAM-type steps use the same draw for their
ascent and descent gradients.
"""

# Standard
import abc
import typing

# Third Party
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt
import numpy as np
import numpy.typing as npt

# Local
from ..core.errors import OracleKindError
from ..core.linalg import DEFAULT_CLAMP_TOL, psd_sqrt
from ..core.rng import RngStream, as_generator
from .base import LossModel


class NoiseDraw(abc.ABC):
    """One realization of the gradient noise anchored at point x"""

    def __init__(self, model: LossModel, x: np.ndarray) -> None:
        self.model = model
        self.x = x

    @abc.abstractmethod
    def grad(self, y: npt.ArrayLike) -> np.ndarray:
        """∇f_γ(y) with the drawn γ"""

    @abc.abstractmethod
    def hvp(self, y: npt.ArrayLike, v: npt.ArrayLike) -> np.ndarray:
        """∇²f_γ(y)·v with the drawn γ"""

    @property
    @abc.abstractmethod
    def noise(self) -> np.ndarray:
        """Z = ∇f_γ(x) − ∇f(x) at the anchor point"""


class AdditiveDraw(NoiseDraw):
    def __init__(self, model: LossModel, x: np.ndarray, z: np.ndarray) -> None:
        super().__init__(model, x)
        self.z = z

    def grad(self, y: npt.ArrayLike) -> np.ndarray:
        return self.model.grad(y) + self.z

    def hvp(self, y: npt.ArrayLike, v: npt.ArrayLike) -> np.ndarray:
        return self.model.hvp(y, v)

    @property
    def noise(self) -> np.ndarray:
        return self.z


class MinibatchDraw(NoiseDraw):
    def __init__(self, model: LossModel, x: np.ndarray, indices: np.ndarray) -> None:
        super().__init__(model, x)
        self.indices = indices

    def grad(self, y: npt.ArrayLike) -> np.ndarray:
        return self.model.grad(y, self.indices)

    def hvp(self, y: npt.ArrayLike, v: npt.ArrayLike) -> np.ndarray:
        return self.model.hvp(y, v, self.indices)

    @property
    def noise(self) -> np.ndarray:
        return self.grad(self.x) - self.model.grad(self.x)


def _anchor(x: npt.ArrayLike, samples: int | None) -> np.ndarray:
    xs = np.asarray(x, dtype=float)
    if samples is None:
        return xs
    return np.broadcast_to(
        xs[..., None, :], xs.shape[:-1] + (samples, xs.shape[-1])
    )


class AdditiveGaussian(BaseModel):
    """∇f_γ(x) = ∇f(x) + Z with Z ~ N(0, ς²I)"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: typing.Literal["additive-gaussian"] = "additive-gaussian"
    scale: NonNegativeFloat = Field(
        default=0.0, description="Noise standard deviation ς per coordinate."
    )

    def draw(
        self,
        model: LossModel,
        x: npt.ArrayLike,
        rng: np.random.Generator,
        samples: int | None = None,
    ) -> NoiseDraw:
        """Draw noise for x; with ``samples`` an extra axis of that size is
        inserted before the last one"""
        anchor = _anchor(x, samples)
        z = self.scale * rng.standard_normal(anchor.shape)
        return AdditiveDraw(model, anchor, z)

    def covariance(self, model: LossModel, x: npt.ArrayLike) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        cov = self.scale**2 * np.eye(model.dim)
        return np.broadcast_to(cov, xs.shape[:-1] + cov.shape).copy()

    def covariance_sqrt(
        self, model: LossModel, x: npt.ArrayLike, clamp_tol: float = DEFAULT_CLAMP_TOL
    ) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        root = self.scale * np.eye(model.dim)
        return np.broadcast_to(root, xs.shape[:-1] + root.shape).copy()


class Minibatch(BaseModel):
    """Mean gradient over B examples drawn uniformly with replacement"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: typing.Literal["minibatch"] = "minibatch"
    batch_size: PositiveInt = Field(default=1, description="Minibatch size B.")

    def _n(self, model: LossModel) -> int:
        n = model.n_examples
        if n is None:
            raise OracleKindError(
                f"minibatch oracle needs a dataset-backed model, got {type(model).__name__}"
            )
        if self.batch_size > n:
            raise ValueError(f"batch size {self.batch_size} exceeds dataset size {n}")
        return n

    def draw(
        self,
        model: LossModel,
        x: npt.ArrayLike,
        rng: np.random.Generator,
        samples: int | None = None,
    ) -> NoiseDraw:
        n = self._n(model)
        anchor = _anchor(x, samples)
        indices = rng.integers(0, n, size=anchor.shape[:-1] + (self.batch_size,))
        return MinibatchDraw(model, anchor, indices)

    def full_batch(self, model: LossModel, x: npt.ArrayLike) -> NoiseDraw:
        """Draw whose index set is the whole dataset"""
        n = self._n(model)
        return MinibatchDraw(model, np.asarray(x, dtype=float), np.arange(n))

    def covariance(self, model: LossModel, x: npt.ArrayLike) -> np.ndarray:
        n = self._n(model)
        grads = model.per_example_grads(x)
        centered = grads - grads.mean(axis=-2, keepdims=True)
        per_example = np.swapaxes(centered, -1, -2) @ centered / n
        return per_example / self.batch_size

    def covariance_sqrt(
        self, model: LossModel, x: npt.ArrayLike, clamp_tol: float = DEFAULT_CLAMP_TOL
    ) -> np.ndarray:
        return typing.cast(np.ndarray, psd_sqrt(self.covariance(model, x), clamp_tol))


GradOracle = typing.Annotated[
    typing.Union[AdditiveGaussian, Minibatch], Field(discriminator="kind")
]


def oracle_sample(
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    x: npt.ArrayLike,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """One stochastic gradient ∇f_γ(x)"""
    return oracle.draw(model, x, as_generator(rng)).grad(x)
