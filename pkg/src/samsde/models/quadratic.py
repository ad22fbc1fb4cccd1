# SPDX-License-Identifier: Apache-2.0
"""Quadratic landscapes: f(x) = ½xᵀHx, plus a quartic-regularized variant"""

# Third Party
import numpy as np
import numpy.typing as npt

# Local
from ..core.linalg import sym_matrix
from .base import HessianKind, Indices, LossModel


class QuadraticModel(LossModel):
    hessian_kind = HessianKind.ANALYTIC

    def __init__(self, h: npt.ArrayLike) -> None:
        self.h = sym_matrix(h)
        self.h.setflags(write=False)
        self.dim = self.h.shape[0]

    def value(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        return 0.5 * np.einsum("...i,ij,...j->...", xs, self.h, xs)

    def grad(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        return self._check(x) @ self.h

    def hessian(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        return np.broadcast_to(self.h, xs.shape[:-1] + self.h.shape).copy()

    def hvp(
        self, x: npt.ArrayLike, v: npt.ArrayLike, indices: Indices = None
    ) -> np.ndarray:
        xs = self._check(x)
        out = np.asarray(v, dtype=float) @ self.h
        return np.broadcast_to(out, np.broadcast_shapes(xs.shape, out.shape)).copy()

    def trace_hessian_grad(self, x: npt.ArrayLike) -> np.ndarray:
        return np.zeros_like(self._check(x))


class EmbeddedSaddleModel(QuadraticModel):
    """½xᵀHx + λΣx⁴: a saddle at the origin inside a bounded basin"""

    def __init__(self, h: npt.ArrayLike, lam: float) -> None:
        if lam < 0:
            raise ValueError(f"λ must be >= 0, got {lam}")
        super().__init__(h)
        self.lam = float(lam)

    def value(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        return super().value(xs) + self.lam * np.sum(xs**4, axis=-1)

    def grad(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        return xs @ self.h + 4.0 * self.lam * xs**3

    def hessian(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        diag = 12.0 * self.lam * xs**2
        return self.h + diag[..., :, None] * np.eye(self.dim)

    def hvp(
        self, x: npt.ArrayLike, v: npt.ArrayLike, indices: Indices = None
    ) -> np.ndarray:
        xs = self._check(x)
        vs = np.asarray(v, dtype=float)
        return vs @ self.h + 12.0 * self.lam * xs**2 * vs

    def trace_hessian_grad(self, x: npt.ArrayLike) -> np.ndarray:
        return 24.0 * self.lam * self._check(x)


def quadratic_model(h: npt.ArrayLike) -> QuadraticModel:
    return QuadraticModel(h)


def embedded_saddle_model(h: npt.ArrayLike, lam: float) -> EmbeddedSaddleModel:
    return EmbeddedSaddleModel(h, lam)


def random_spd_hessian(d: int, rng: np.random.Generator) -> np.ndarray:
    """H = AAᵀ/(2d) with A a standard Gaussian d×2d matrix"""
    a = rng.standard_normal((d, 2 * d))
    return a @ a.T / (2 * d)


def diagonal_hessian(
    d: int,
    rng: np.random.Generator,
    n_negative: int = 0,
    low: float = 0.0,
    high: float = 1.0,
) -> np.ndarray:
    """Diagonal H with uniform eigenvalues, the smallest n_negative sign-flipped"""
    if not 0 <= n_negative <= d:
        raise ValueError(f"n_negative must be in [0, {d}], got {n_negative}")
    eig = np.sort(rng.uniform(low, high, size=d))[::-1]
    if n_negative:
        eig[d - n_negative :] *= -1.0
    return np.diag(eig)
