# SPDX-License-Identifier: Apache-2.0
"""Fully connected networks trained on a Dataset

Value and gradient come from a manual forward/backward pass over the full
dataset (or over minibatch indices). The Hessian is left to the central
differences of the base class.
"""

# Standard
import logging
import typing

# Third Party
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveInt
from scipy import special
import numpy as np
import numpy.typing as npt

# Local
from ..core.errors import DatasetError, DimensionMismatchError
from .base import HessianKind, Indices, LossModel
from .datasets import Dataset

logger = logging.getLogger(__name__)

Activation = typing.Literal["identity", "sigmoid"]
Head = typing.Literal["cross-entropy", "logistic-l2", "mse"]


class MLPArchitecture(BaseModel):
    """Layer layout, activation and loss head of an MLP"""

    model_config = ConfigDict(extra="forbid")

    widths: list[PositiveInt] = Field(
        default_factory=list, description="Hidden layer widths, input to output."
    )
    activation: Activation = Field(
        default="identity", description="Hidden layer activation."
    )
    head: Head = Field(default="cross-entropy", description="Loss head.")
    l2: NonNegativeFloat = Field(
        default=0.1, description="ℓ² penalty λ of the logistic-l2 head."
    )
    bias: bool = Field(default=True, description="Add a bias to every layer.")
    input_dim: PositiveInt | None = Field(
        default=None, description="Expected number of features, checked against the dataset."
    )
    output_dim: PositiveInt | None = Field(
        default=None, description="Expected output width, checked against the head."
    )


class MLPModel(LossModel):
    hessian_kind = HessianKind.FINITE_DIFFERENCE
    vectorized = False

    def __init__(self, arch: MLPArchitecture, dataset: Dataset) -> None:
        self.arch = arch
        self.dataset = dataset
        if arch.input_dim is not None and arch.input_dim != dataset.p:
            raise DimensionMismatchError(
                f"architecture expects {arch.input_dim} features, dataset has {dataset.p}"
            )
        out = self._output_width()
        if arch.output_dim is not None and arch.output_dim != out:
            raise DimensionMismatchError(
                f"architecture output width {arch.output_dim} does not match the "
                f"{arch.head} head on {dataset.name} ({out})"
            )
        self.sizes = [dataset.p, *arch.widths, out]
        self._shapes: list[tuple[int, int]] = list(
            zip(self.sizes[:-1], self.sizes[1:], strict=True)
        )
        self.dim = sum(
            n_in * n_out + (n_out if arch.bias else 0) for n_in, n_out in self._shapes
        )
        self._targets = self._encode_targets()

    @property
    def n_examples(self) -> int:
        return self.dataset.n

    def _output_width(self) -> int:
        head = self.arch.head
        if head == "cross-entropy":
            return self.dataset.n_classes
        if head == "logistic-l2":
            labels = self.dataset.labels
            if not np.all(np.isin(labels, (0, 1))):
                raise DatasetError("logistic head needs labels in {0, 1}")
        return 1

    def _encode_targets(self) -> np.ndarray:
        labels = self.dataset.labels
        if self.arch.head == "cross-entropy":
            return np.eye(self.sizes[-1])[labels]
        return labels.astype(float)[:, None]

    def unpack(self, x: np.ndarray) -> list[tuple[np.ndarray, np.ndarray | None]]:
        layers: list[tuple[np.ndarray, np.ndarray | None]] = []
        pos = 0
        for n_in, n_out in self._shapes:
            w = x[pos : pos + n_in * n_out].reshape(n_in, n_out)
            pos += n_in * n_out
            b = None
            if self.arch.bias:
                b = x[pos : pos + n_out]
                pos += n_out
            layers.append((w, b))
        return layers

    def init_params(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Gaussian weights with variance scale²/fan_in, zero biases"""
        parts: list[np.ndarray] = []
        for n_in, n_out in self._shapes:
            parts.append(scale * rng.standard_normal(n_in * n_out) / np.sqrt(n_in))
            if self.arch.bias:
                parts.append(np.zeros(n_out))
        return np.concatenate(parts) if parts else np.zeros(0)

    def predict(self, x: npt.ArrayLike, features: np.ndarray | None = None) -> np.ndarray:
        params = self._check(x)
        feats = self.dataset.features if features is None else features
        acts, _ = self._forward(params, feats)
        return acts[-1]

    def _activate(self, z: np.ndarray) -> np.ndarray:
        if self.arch.activation == "sigmoid":
            return special.expit(z)
        return z

    def _activate_grad(self, z: np.ndarray, a: np.ndarray) -> np.ndarray | float:
        if self.arch.activation == "sigmoid":
            return a * (1.0 - a)
        return 1.0

    def _forward(
        self, x: np.ndarray, feats: np.ndarray
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        acts = [feats]
        pre: list[np.ndarray] = []
        layers = self.unpack(x)
        for i, (w, b) in enumerate(layers):
            z = acts[-1] @ w
            if b is not None:
                z = z + b
            pre.append(z)
            last = i == len(layers) - 1
            acts.append(z if last else self._activate(z))
        return acts, pre

    def _batch(self, indices: Indices) -> tuple[np.ndarray, np.ndarray]:
        if indices is None:
            return self.dataset.features, self._targets
        idx = np.asarray(indices, dtype=np.int64)
        return self.dataset.features[idx], self._targets[idx]

    def _loss_and_delta(
        self, out: np.ndarray, targets: np.ndarray
    ) -> tuple[float, np.ndarray]:
        m = out.shape[0]
        head = self.arch.head
        if head == "cross-entropy":
            lse = special.logsumexp(out, axis=1)
            loss = float(np.mean(lse - np.sum(out * targets, axis=1)))
            delta = (special.softmax(out, axis=1) - targets) / m
        elif head == "logistic-l2":
            s = out[:, 0]
            y = targets[:, 0]
            loss = float(np.mean(-special.log_expit(-s) - y * s))
            delta = ((special.expit(s) - y) / m)[:, None]
        else:
            resid = out - targets
            loss = float(np.mean(np.sum(resid * resid, axis=1)))
            delta = 2.0 * resid / m
        return loss, delta

    def _penalty(self, x: np.ndarray) -> float:
        if self.arch.head == "logistic-l2":
            return 0.5 * self.arch.l2 * float(x @ x)
        return 0.0

    def _value(self, x: np.ndarray, indices: Indices) -> float:
        feats, targets = self._batch(indices)
        acts, _ = self._forward(x, feats)
        loss, _ = self._loss_and_delta(acts[-1], targets)
        return loss + self._penalty(x)

    def _grad(self, x: np.ndarray, indices: Indices) -> np.ndarray:
        feats, targets = self._batch(indices)
        acts, pre = self._forward(x, feats)
        _, delta = self._loss_and_delta(acts[-1], targets)
        layers = self.unpack(x)
        grads: list[np.ndarray] = []
        for i in range(len(layers) - 1, -1, -1):
            w, b = layers[i]
            if b is not None:
                grads.append(delta.sum(axis=0))
            grads.append((acts[i].T @ delta).ravel())
            if i > 0:
                delta = (delta @ w.T) * self._activate_grad(pre[i - 1], acts[i])
        grads.reverse()
        g = np.concatenate(grads)
        if self.arch.head == "logistic-l2":
            g = g + self.arch.l2 * x
        return g


def mlp_model(arch: MLPArchitecture, dataset: Dataset) -> MLPModel:
    return MLPModel(arch, dataset)
