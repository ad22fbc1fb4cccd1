# SPDX-License-Identifier: Apache-2.0
"""Closed-form results for the quadratic loss f(x) = ½xᵀHx

Vectors passed to the eigenbasis helpers are expressed in the eigenbasis of
H with eigenvalues sorted descending.
"""

# Standard
import enum
import math
import typing

# Third Party
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat
from scipy import linalg as sla
import numpy as np
import numpy.typing as npt

# First Party
from samsde.core.errors import NonNormalizableError
from samsde.core.linalg import psd_sqrt, sym_eigendecompose, sym_matrix
from samsde.sde import SdeSystem


class QuadSpec(BaseModel):
    """Spectrum and hyperparameters of a noisy quadratic with Σ = ς²I"""

    model_config = ConfigDict(frozen=True)

    eigvals: tuple[float, ...] = Field(description="Eigenvalues of H, sorted descending.")
    rho: NonNegativeFloat = 0.0
    eta: PositiveFloat = 1e-3
    noise: NonNegativeFloat = Field(default=0.0, description="Noise scale ς.")

    @classmethod
    def from_hessian(
        cls, h: npt.ArrayLike, *, rho: float = 0.0, eta: float = 1e-3, noise: float = 0.0
    ) -> "QuadSpec":
        eig, _ = sym_eigendecompose(h)
        return cls(eigvals=tuple(float(e) for e in eig), rho=rho, eta=eta, noise=noise)

    @property
    def lam(self) -> np.ndarray:
        return np.asarray(self.eigvals, dtype=float)

    @property
    def lambda_star(self) -> float | None:
        """Largest negative eigenvalue, None if H is PSD"""
        neg = [e for e in self.eigvals if e < 0]
        return max(neg) if neg else None


class PullPush(str, enum.Enum):
    PULLED = "pulled"
    PUSHED = "pushed"
    OUTSIDE = "outside"


class StationaryLaw(typing.NamedTuple):
    variance: float
    pdf: typing.Callable[[npt.ArrayLike], np.ndarray]


def usam_rates(spec: QuadSpec) -> np.ndarray:
    """Per-eigendirection decay rates λ(1+ρλ) of the USAM flow"""
    lam = spec.lam
    return lam * (1.0 + spec.rho * lam)


def usam_ode_solution(x0: npt.ArrayLike, spec: QuadSpec, t: npt.ArrayLike) -> np.ndarray:
    """X_t^j = X_0^j·exp(−λ_j(1+ρλ_j)t); t may be an array of times

    Result shape is ``np.shape(t) + (d,)``.
    """
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise ValueError("t must be >= 0")
    x = np.asarray(x0, dtype=float)
    return x * np.exp(-usam_rates(spec) * ts[..., None])


def usam_saddle_threshold(lambda_star: float) -> float:
    """ρ above which the USAM flow is attracted by the saddle"""
    if lambda_star >= 0:
        raise ValueError(f"λ* must be negative, got {lambda_star}")
    return -1.0 / lambda_star


def usam_stationary(spec: QuadSpec, i: int) -> StationaryLaw:
    """Stationary law of eigen-coordinate i under the USAM SDE

    Density ∝ exp(−λ_i x² / (ης²(1+ρλ_i))), variance ης²(1+ρλ_i)/(2λ_i).
    """
    lam = spec.eigvals[i]
    rate = lam * (1.0 + spec.rho * lam)
    if rate <= 0:
        raise NonNormalizableError(lam, spec.rho)
    variance = spec.eta * spec.noise**2 * (1.0 + spec.rho * lam) / (2.0 * lam)
    if variance == 0:
        raise ValueError("stationary law is a point mass when ς = 0")
    norm = 1.0 / math.sqrt(2.0 * math.pi * variance)

    def pdf(x: npt.ArrayLike) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        return norm * np.exp(-0.5 * xs * xs / variance)

    return StationaryLaw(variance, pdf)


def sam_ode_drift_quad(
    x: npt.ArrayLike, h: npt.ArrayLike, rho: float, eps_floor: float = 1e-12
) -> np.ndarray:
    """−H(I + ρH/max(‖Hx‖, ε))x"""
    xs = np.asarray(x, dtype=float)
    hm = np.asarray(h, dtype=float)
    hx = xs @ hm
    radius = rho / max(float(np.linalg.norm(hx)), eps_floor)
    return -(hx + radius * (hx @ hm))


def sam_lyapunov_derivative(x: npt.ArrayLike, h: npt.ArrayLike, rho: float) -> float:
    """d/dt ½‖X‖² along the quadratic SAM flow: −(xᵀHx + ρ‖Hx‖)"""
    xs = np.asarray(x, dtype=float)
    hx = xs @ np.asarray(h, dtype=float)
    return -float(xs @ hx + rho * np.linalg.norm(hx))


def _lambda_star(h: npt.ArrayLike) -> float | None:
    eig, _ = sym_eigendecompose(h)
    neg = eig[eig < 0]
    return float(neg.max()) if neg.size else None


def sam_attractor_check(x: npt.ArrayLike, h: npt.ArrayLike, rho: float) -> bool:
    """‖Hx‖ ≤ −ρλ*; always true for PSD H"""
    lam_star = _lambda_star(h)
    if lam_star is None:
        return True
    hx = np.asarray(x, dtype=float) @ np.asarray(h, dtype=float)
    return bool(np.linalg.norm(hx) <= -rho * lam_star)


def dnsam_pull_push_classify(
    x: npt.ArrayLike, h: npt.ArrayLike, rho: float, eps: float
) -> PullPush:
    """Pushed for ‖Hx‖ < ε, pulled for ε ≤ ‖Hx‖ ≤ −ρλ* (no upper bound if PSD)"""
    if eps <= 0:
        raise ValueError(f"ε must be > 0, got {eps}")
    hx_norm = float(np.linalg.norm(np.asarray(x, dtype=float) @ np.asarray(h, dtype=float)))
    if hx_norm < eps:
        return PullPush.PUSHED
    lam_star = _lambda_star(h)
    if lam_star is None or hx_norm <= -rho * lam_star:
        return PullPush.PULLED
    return PullPush.OUTSIDE


def usam_suboptimality(h: npt.ArrayLike, rho: float, eta: float) -> float:
    """Stationary 𝔼f with Σ = H: (η/4)(Tr H + 2ρ Tr H² + ρ² Tr H³)"""
    hm = sym_matrix(h)
    eig, _ = sym_eigendecompose(hm)
    if eig.min() < -1e-12 * max(1.0, abs(eig).max()):
        raise ValueError("H must be positive semi-definite")
    h2 = hm @ hm
    return eta / 4.0 * (np.trace(hm) + 2 * rho * np.trace(h2) + rho**2 * np.trace(h2 @ hm))


def usam_quadratic_sde(
    h: npt.ArrayLike, rho: float, eta: float, noise_cov: npt.ArrayLike
) -> SdeSystem:
    """dX = −H(I+ρH)X dt + (I+ρH)√η Σ^{1/2} dW for an arbitrary constant Σ"""
    hm = sym_matrix(h)
    amp = np.eye(hm.shape[0]) + rho * hm
    root = math.sqrt(eta) * amp @ typing.cast(np.ndarray, psd_sqrt(noise_cov))
    drift_matrix = hm @ amp

    def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        return -(x @ drift_matrix.T)

    def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        return np.broadcast_to(root, np.shape(x)[:-1] + root.shape)

    return SdeSystem(drift, diffusion, eta, name="USAM-SDE-quadratic")


def usam_stationary_loss(
    h: npt.ArrayLike, rho: float, eta: float, noise_cov: npt.ArrayLike
) -> float:
    """Exact stationary 𝔼f = ½Tr(HC) of :func:`usam_quadratic_sde`

    C solves the Lyapunov equation AC + CAᵀ = DDᵀ with A = H(I+ρH) and
    D = (I+ρH)√η Σ^{1/2}.
    """
    hm = sym_matrix(h)
    amp = np.eye(hm.shape[0]) + rho * hm
    eig = np.linalg.eigvalsh(hm)
    rates = eig * (1.0 + rho * eig)
    if rates.min() <= 0:
        raise NonNormalizableError(float(eig[np.argmin(rates)]), rho)
    a = hm @ amp
    root = math.sqrt(eta) * amp @ typing.cast(np.ndarray, psd_sqrt(noise_cov))
    cov = sla.solve_continuous_lyapunov(a, root @ root.T)
    return 0.5 * float(np.trace(hm @ cov))
