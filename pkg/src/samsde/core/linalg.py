# SPDX-License-Identifier: Apache-2.0
"""Dense symmetric linear algebra

All functions accept a single matrix of shape (d, d) or a stack of shape
(..., d, d) and broadcast over the leading axes.
"""

# Standard
import logging

# Third Party
import numpy as np
import numpy.typing as npt

# Local
from .errors import IndefiniteCovarianceError, NotSymmetricError

logger = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-12
DEFAULT_CLAMP_TOL = 1e-8


def sym_matrix(m: npt.ArrayLike, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate a (stack of) symmetric matrices and return an exactly symmetric copy"""
    arr = np.array(m, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    diff = np.abs(arr - np.swapaxes(arr, -1, -2)).max(initial=0.0)
    scale = np.abs(arr).max(initial=0.0)
    asym = diff / scale if scale > 0 else 0.0
    if asym > rtol:
        raise NotSymmetricError(float(asym))
    return 0.5 * (arr + np.swapaxes(arr, -1, -2))


def sym_eigendecompose(m: npt.ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors

    Returns ``(eigvals, eigvecs)`` with ``eigvecs[..., :, j]`` the j-th vector.
    """
    sym = sym_matrix(m)
    eigvals, eigvecs = np.linalg.eigh(sym)
    return eigvals[..., ::-1], eigvecs[..., ::-1]


def psd_sqrt(
    m: npt.ArrayLike,
    clamp_tol: float = DEFAULT_CLAMP_TOL,
    *,
    return_count: bool = False,
) -> np.ndarray | tuple[np.ndarray, int]:
    """Symmetric square root of a positive semi-definite matrix

    Eigenvalues in [-clamp_tol, 0) are set to zero; anything more negative
    raises IndefiniteCovarianceError.
    """
    if clamp_tol < 0:
        raise ValueError(f"clamp_tol must be >= 0, got {clamp_tol}")
    eigvals, eigvecs = sym_eigendecompose(m)
    min_eig = float(eigvals.min(initial=np.inf))
    if min_eig < -clamp_tol:
        raise IndefiniteCovarianceError(min_eig, clamp_tol)
    negative = eigvals < 0
    clamped = int(np.count_nonzero(negative))
    if clamped:
        logger.debug("psd_sqrt: clamped %d slightly negative eigenvalue(s)", clamped)
        eigvals = np.where(negative, 0.0, eigvals)
    root = (eigvecs * np.sqrt(eigvals)[..., None, :]) @ np.swapaxes(eigvecs, -1, -2)
    root = 0.5 * (root + np.swapaxes(root, -1, -2))
    if return_count:
        return root, clamped
    return root


def gaussian_vector(
    rng: np.random.Generator,
    d: int,
    cov_sqrt: npt.ArrayLike | None = None,
    size: tuple[int, ...] = (),
) -> np.ndarray:
    """Draw ``cov_sqrt @ w`` with ``w`` standard normal

    ``cov_sqrt`` may be a single (d, d) matrix, a stack matching ``size`` or
    None for the identity. Result shape is ``size + (d,)``.
    """
    w = rng.standard_normal(tuple(size) + (d,))
    if cov_sqrt is None:
        return w
    root = np.asarray(cov_sqrt, dtype=float)
    if root.shape[-2:] != (d, d):
        raise ValueError(f"cov_sqrt must be {d}x{d}, got {root.shape}")
    return np.einsum("...ij,...j->...i", root, w)
