# SPDX-License-Identifier: Apache-2.0
"""Two-layer linear autoencoder ‖W₂W₁ − I‖²_F

Parameters are packed as x = vec(W₁) ⧺ vec(W₂) in row-major order. The
origin is a saddle.
"""

# Third Party
import numpy as np
import numpy.typing as npt

# Local
from .base import HessianKind, Indices, LossModel


class LinearAutoencoderModel(LossModel):
    hessian_kind = HessianKind.FINITE_DIFFERENCE

    def __init__(self, d: int) -> None:
        if d < 1:
            raise ValueError(f"d must be >= 1, got {d}")
        self.d = d
        self.dim = 2 * d * d

    def unpack(self, x: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        xs = self._check(x)
        lead = xs.shape[:-1]
        k = self.d * self.d
        w1 = xs[..., :k].reshape(lead + (self.d, self.d))
        w2 = xs[..., k:].reshape(lead + (self.d, self.d))
        return w1, w2

    def pack(self, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
        lead = w1.shape[:-2]
        return np.concatenate(
            [w1.reshape(lead + (-1,)), w2.reshape(lead + (-1,))], axis=-1
        )

    def residual(self, x: npt.ArrayLike) -> np.ndarray:
        w1, w2 = self.unpack(x)
        return w2 @ w1 - np.eye(self.d)

    def value(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        e = self.residual(x)
        return np.sum(e * e, axis=(-2, -1))

    def grad(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        w1, w2 = self.unpack(x)
        e = w2 @ w1 - np.eye(self.d)
        g1 = 2.0 * np.swapaxes(w2, -1, -2) @ e
        g2 = 2.0 * e @ np.swapaxes(w1, -1, -2)
        return self.pack(g1, g2)

    def hvp(
        self, x: npt.ArrayLike, v: npt.ArrayLike, indices: Indices = None
    ) -> np.ndarray:
        xs = self._check(x)
        vs = np.asarray(v, dtype=float)
        xs, vs = np.broadcast_arrays(xs, vs)
        w1, w2 = self.unpack(xs)
        v1, v2 = self.unpack(vs)
        e = w2 @ w1 - np.eye(self.d)
        de = v2 @ w1 + w2 @ v1
        h1 = 2.0 * (np.swapaxes(v2, -1, -2) @ e + np.swapaxes(w2, -1, -2) @ de)
        h2 = 2.0 * (de @ np.swapaxes(w1, -1, -2) + e @ np.swapaxes(v1, -1, -2))
        return self.pack(h1, h2)

    def init_params(self, rng: np.random.Generator, scale: float) -> np.ndarray:
        """Gaussian W₁, W₂ scaled by ``scale``"""
        return scale * rng.standard_normal(self.dim)


def linear_autoencoder_model(d: int) -> LinearAutoencoderModel:
    return LinearAutoencoderModel(d)
