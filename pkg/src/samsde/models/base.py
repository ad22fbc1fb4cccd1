# SPDX-License-Identifier: Apache-2.0
"""Loss model interface

A LossModel evaluates f, ∇f, ∇²f on a single point of shape (d,) or on an
ensemble of points of shape (..., d). Subclasses that cannot broadcast set
``vectorized = False`` and implement the single-point ``_value``/``_grad``
hooks; the base class loops over rows for them.
"""

# Standard
import abc
import enum
import typing

# Third Party
import numpy as np
import numpy.typing as npt

Indices = typing.Optional[np.ndarray]

_FD_STEP = 1e-5
_FD_STEP_2ND = 1e-4


class HessianKind(str, enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"


def fd_step(x: np.ndarray, base: float = _FD_STEP) -> np.ndarray:
    """Central-difference step per point: base·max(1, ‖x‖∞)"""
    return base * np.maximum(1.0, np.abs(x).max(axis=-1, initial=0.0))


class LossModel(abc.ABC):
    dim: int
    hessian_kind: HessianKind = HessianKind.FINITE_DIFFERENCE
    vectorized: bool = True

    @property
    def n_examples(self) -> int | None:
        """Number of training examples, None for closed-form objectives"""
        return None

    # -- single point hooks for non-vectorized models --

    def _value(self, x: np.ndarray, indices: Indices) -> float:
        raise NotImplementedError

    def _grad(self, x: np.ndarray, indices: Indices) -> np.ndarray:
        raise NotImplementedError

    # -- public API --

    def value(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        return self._rowwise(self._value, xs, indices, scalar=True)

    def grad(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        xs = self._check(x)
        return self._rowwise(self._grad, xs, indices)

    def hessian(self, x: npt.ArrayLike, indices: Indices = None) -> np.ndarray:
        """Central differences of the gradient, symmetrized"""
        xs = self._check(x)
        eye = np.eye(self.dim)
        h = fd_step(xs)[..., None, None]
        plus = self.grad(xs[..., None, :] + h * eye, _expand(indices))
        minus = self.grad(xs[..., None, :] - h * eye, _expand(indices))
        # row j is the derivative along e_j
        hess = (plus - minus) / (2.0 * h)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))

    def hvp(
        self, x: npt.ArrayLike, v: npt.ArrayLike, indices: Indices = None
    ) -> np.ndarray:
        """Hessian-vector product by a central difference along v"""
        xs = self._check(x)
        vs = np.asarray(v, dtype=float)
        xs, vs = np.broadcast_arrays(xs, vs)
        norm = np.linalg.norm(vs, axis=-1, keepdims=True)
        safe = np.where(norm > 0, norm, 1.0)
        h = fd_step(xs)[..., None]
        step = h * vs / safe
        out = (self.grad(xs + step, indices) - self.grad(xs - step, indices)) / (
            2.0 * h
        )
        return np.where(norm > 0, out * safe, 0.0)

    def trace_hessian_grad(self, x: npt.ArrayLike) -> np.ndarray:
        """∇ Tr ∇²f(x) via second central differences of the gradient

        ∂_i Tr H = Σ_j ∂_j² ∂_i f ≈ Σ_j [g(x+h e_j) − 2 g(x) + g(x−h e_j)]_i / h²
        """
        xs = self._check(x)
        eye = np.eye(self.dim)
        h = fd_step(xs, _FD_STEP_2ND)[..., None, None]
        g0 = self.grad(xs)
        plus = self.grad(xs[..., None, :] + h * eye)
        minus = self.grad(xs[..., None, :] - h * eye)
        second = (plus - 2.0 * g0[..., None, :] + minus) / h**2
        return second.sum(axis=-2)

    def per_example_grads(self, x: npt.ArrayLike) -> np.ndarray:
        """Gradients of the per-example losses, shape (..., n, d)"""
        n = self.n_examples
        if n is None:
            raise TypeError(f"{type(self).__name__} has no training examples")
        xs = self._check(x)
        return np.stack(
            [self.grad(xs, np.array([i])) for i in range(n)], axis=-2
        )

    # -- helpers --

    def _check(self, x: npt.ArrayLike) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        if xs.shape[-1:] != (self.dim,):
            raise ValueError(
                f"{type(self).__name__} expects points of dimension {self.dim}, got shape {xs.shape}"
            )
        return xs

    def _rowwise(
        self,
        fn: typing.Callable[[np.ndarray, Indices], typing.Any],
        xs: np.ndarray,
        indices: Indices,
        scalar: bool = False,
    ) -> np.ndarray:
        if self.vectorized:
            raise NotImplementedError(
                f"{type(self).__name__} is vectorized and must override value/grad"
            )
        lead = xs.shape[:-1]
        if not lead:
            return np.asarray(fn(xs, None if indices is None else np.asarray(indices)))
        rows = xs.reshape(-1, self.dim)
        idx_rows = _index_rows(indices, lead)
        out = [fn(row, idx) for row, idx in zip(rows, idx_rows, strict=True)]
        tail = () if scalar else (self.dim,)
        return np.asarray(out, dtype=float).reshape(lead + tail)


def _expand(indices: Indices) -> Indices:
    """Insert the finite-difference axis into per-row minibatch indices"""
    if indices is None:
        return None
    idx = np.asarray(indices)
    if idx.ndim <= 1:
        return idx
    return idx[..., None, :]


def _index_rows(indices: Indices, lead: tuple[int, ...]) -> list[np.ndarray | None]:
    count = int(np.prod(lead))
    if indices is None:
        return [None] * count
    idx = np.asarray(indices)
    if idx.ndim <= 1:
        return [idx] * count
    idx = np.broadcast_to(idx, lead + idx.shape[-1:])
    return list(idx.reshape(count, idx.shape[-1]))
