# SPDX-License-Identifier: Apache-2.0
"""SDE models of the SAM family and their Euler-Maruyama integration

``build_sde`` returns an :class:`SdeSystem` whose ``diffusion_sqrt``
already contains the √η factor, so one EM step of length Δt reads

    x' = x + drift(x)·Δt + diffusion_sqrt(x)·√Δt·w

and Δt = η reproduces the time grid t = kη of the discrete algorithms.
Expectations over the gradient noise are Monte-Carlo estimates with fresh
oracle draws at every evaluation.
"""

# Standard
import dataclasses
import enum
import logging
import math
import typing

# Third Party
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
)
import numpy as np
import numpy.typing as npt

# First Party
from samsde.core.errors import DivergenceError, OracleKindError
from samsde.core.linalg import DEFAULT_CLAMP_TOL, psd_sqrt
from samsde.core.rng import RngStream, as_generator
from samsde.models.base import LossModel
from samsde.models.oracle import AdditiveGaussian, Minibatch

logger = logging.getLogger(__name__)

Evaluator = typing.Callable[[np.ndarray, np.random.Generator], np.ndarray]


class SdeVariant(str, enum.Enum):
    SGD = "SGD-SDE"
    USAM_GENERAL = "USAM-SDE-general"
    USAM_SIMPLIFIED = "USAM-SDE-simplified"
    USAM_DRIFT_ONLY = "USAM-SDE-drift-only"
    DNSAM = "DNSAM-SDE"
    DNSAM_DRIFT_ONLY = "DNSAM-SDE-drift-only"
    SAM_GENERAL = "SAM-SDE-general"
    SAM_SIMPLIFIED = "SAM-SDE-simplified"
    RSAM_DRIFT = "RSAM-drift-ODE"

    @property
    def needs_constant_noise(self) -> bool:
        return self in _CONSTANT_NOISE


_CONSTANT_NOISE = frozenset(
    {
        SdeVariant.USAM_SIMPLIFIED,
        SdeVariant.USAM_DRIFT_ONLY,
        SdeVariant.DNSAM,
        SdeVariant.DNSAM_DRIFT_ONLY,
        SdeVariant.SAM_SIMPLIFIED,
    }
)


class SdeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: SdeVariant = Field(description="SDE model.")
    eta: PositiveFloat = Field(description="Learning rate η of the modelled algorithm.")
    rho: NonNegativeFloat = Field(default=0.0, description="Ascent radius ρ.")
    mc_samples: PositiveInt = Field(
        default=64, description="Oracle draws per Monte-Carlo expectation."
    )
    clamp_tol: NonNegativeFloat = Field(
        default=DEFAULT_CLAMP_TOL,
        description="Negative covariance eigenvalues down to -clamp_tol are clamped to 0.",
    )
    eps_floor: PositiveFloat = Field(
        default=1e-12, description="Lower bound on gradient norms used for normalization."
    )
    substeps: PositiveInt = Field(
        default=1, description="Euler-Maruyama substeps per learning-rate step."
    )
    rsam_sigma: NonNegativeFloat = Field(
        default=0.0, description="Perturbation scale σ of the RSAM drift."
    )
    indefinite: typing.Literal["raise", "clip"] = Field(
        default="raise",
        description=(
            "What to do when an assembled diffusion covariance has eigenvalues below "
            "-clamp_tol: raise IndefiniteCovarianceError or clip them to 0."
        ),
    )


@dataclasses.dataclass(frozen=True)
class SdeSystem:
    """Drift and diffusion evaluators of one SDE

    Both take ``(x, generator)`` where x has shape (d,) or (..., d);
    ``diffusion_sqrt`` returns matrices of shape (..., d, d).
    """

    drift: Evaluator
    diffusion_sqrt: Evaluator
    eta: float
    name: str = "sde"
    model: LossModel | None = None


def _norm(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(v, axis=-1, keepdims=True)


def _outer_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Mean over the sample axis of aₛbₛᵀ, inputs (..., S, d)"""
    return np.einsum("...si,...sj->...ij", a, b) / a.shape[-2]


def _sym(m: np.ndarray) -> np.ndarray:
    return m + np.swapaxes(m, -1, -2)


def build_sde(
    variant: SdeVariant | str,
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    cfg: SdeConfig,
) -> SdeSystem:
    """Assemble drift and diffusion of ``variant`` for model and oracle"""
    variant = SdeVariant(variant)
    if variant.needs_constant_noise and not isinstance(oracle, AdditiveGaussian):
        raise OracleKindError(
            f"{variant.value} assumes constant gradient noise and needs an "
            f"additive-gaussian oracle, got {oracle.kind}"
        )
    rho = cfg.rho
    eps = cfg.eps_floor
    samples = cfg.mc_samples
    sqrt_eta = math.sqrt(cfg.eta)

    def noise_root(x: np.ndarray) -> np.ndarray:
        return oracle.covariance_sqrt(model, x, cfg.clamp_tol)

    def sgd_diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        return sqrt_eta * noise_root(x)

    assembly_tol = math.inf if cfg.indefinite == "clip" else cfg.clamp_tol

    def assembled(x: np.ndarray, spread: np.ndarray) -> np.ndarray:
        total = oracle.covariance(model, x) + rho * _sym(spread)
        return sqrt_eta * typing.cast(np.ndarray, psd_sqrt(total, assembly_tol))

    drift: Evaluator
    diffusion: Evaluator

    if variant is SdeVariant.SGD:

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            return -model.grad(x)

        diffusion = sgd_diffusion

    elif variant in (SdeVariant.USAM_SIMPLIFIED, SdeVariant.USAM_DRIFT_ONLY):

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            g = model.grad(x)
            return -(g + rho * model.hvp(x, g))

        if variant is SdeVariant.USAM_SIMPLIFIED:

            def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
                amp = np.eye(model.dim) + rho * model.hessian(x)
                return sqrt_eta * (amp @ noise_root(x))

        else:
            diffusion = sgd_diffusion

    elif variant in (SdeVariant.DNSAM, SdeVariant.DNSAM_DRIFT_ONLY):

        def factor(g: np.ndarray) -> np.ndarray:
            # ρ/‖∇f‖ capped at ρ/ε_floor
            return rho / np.maximum(_norm(g), eps)

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            g = model.grad(x)
            return -(g + factor(g) * model.hvp(x, g))

        if variant is SdeVariant.DNSAM:

            def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
                c = factor(model.grad(x))[..., None]
                amp = np.eye(model.dim) + c * model.hessian(x)
                return sqrt_eta * (amp @ noise_root(x))

        else:
            diffusion = sgd_diffusion

    elif variant is SdeVariant.USAM_GENERAL:

        def curvature_samples(
            x: np.ndarray, gen: np.random.Generator
        ) -> tuple[np.ndarray, np.ndarray]:
            draw = oracle.draw(model, x, gen, samples=samples)
            gs = draw.grad(draw.x)
            return gs, draw.hvp(draw.x, gs)

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            _, vs = curvature_samples(x, gen)
            return -(model.grad(x) + rho * vs.mean(axis=-2))

        def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            gs, vs = curvature_samples(x, gen)
            g = model.grad(x)[..., None, :]
            spread = _outer_mean(g - gs, vs.mean(axis=-2, keepdims=True) - vs)
            return assembled(x, spread)

    elif variant is SdeVariant.SAM_GENERAL:

        def normalized_curvature(
            x: np.ndarray, gen: np.random.Generator
        ) -> tuple[np.ndarray, np.ndarray]:
            draw = oracle.draw(model, x, gen, samples=samples)
            gs = draw.grad(draw.x)
            return gs, draw.hvp(draw.x, gs / np.maximum(_norm(gs), eps))

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            _, us = normalized_curvature(x, gen)
            return -(model.grad(x) + rho * us.mean(axis=-2))

        def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            gs, us = normalized_curvature(x, gen)
            g = model.grad(x)[..., None, :]
            spread = _outer_mean(g - gs, us.mean(axis=-2, keepdims=True) - us)
            return assembled(x, spread)

    elif variant is SdeVariant.SAM_SIMPLIFIED:

        def directions(
            x: np.ndarray, gen: np.random.Generator
        ) -> tuple[np.ndarray, np.ndarray]:
            draw = oracle.draw(model, x, gen, samples=samples)
            gs = draw.grad(draw.x)
            return gs, gs / np.maximum(_norm(gs), eps)

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            _, ms = directions(x, gen)
            return -(model.grad(x) + rho * model.hvp(x, ms.mean(axis=-2)))

        def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            gs, ms = directions(x, gen)
            g = model.grad(x)[..., None, :]
            bar = _outer_mean(g - gs, ms.mean(axis=-2, keepdims=True) - ms)
            # Σ + ρ(HΣ̄ + Σ̄ᵀH); the general form gives Σ + ρ(Σ̄H + HΣ̄ᵀ) under
            # constant noise, and the two agree when Σ̄ is symmetric, as it is
            # for isotropic additive noise
            return assembled(x, model.hessian(x) @ bar)

    else:
        half_var = 0.5 * cfg.rsam_sigma**2

        def drift(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            return -(model.grad(x) + half_var * model.trace_hessian_grad(x))

        def diffusion(x: np.ndarray, gen: np.random.Generator) -> np.ndarray:
            return np.zeros(np.shape(x)[:-1] + (model.dim, model.dim))

    return SdeSystem(drift, diffusion, cfg.eta, name=variant.value, model=model)


def expected_grad_norm(
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    x: npt.ArrayLike,
    rng: RngStream | np.random.Generator,
    samples: int,
) -> tuple[float, float]:
    """Monte-Carlo estimate of 𝔼‖∇f_γ(x)‖ and its standard error"""
    gen = as_generator(rng)
    xs = np.asarray(x, dtype=float)
    draw = oracle.draw(model, xs, gen, samples=samples)
    norms = np.linalg.norm(draw.grad(draw.x), axis=-1)
    return float(norms.mean()), float(norms.std(ddof=1) / math.sqrt(samples))


def em_step(
    sys: SdeSystem, x: np.ndarray, dt: float, gen: np.random.Generator
) -> np.ndarray:
    b = sys.drift(x, gen)
    root = sys.diffusion_sqrt(x, gen)
    w = gen.standard_normal(x.shape)
    return x + b * dt + math.sqrt(dt) * np.einsum("...ij,...j->...i", root, w)


def em_iterate(
    sys: SdeSystem,
    x0: npt.ArrayLike,
    steps: int,
    rng: RngStream | np.random.Generator,
    *,
    substeps: int = 1,
    raise_on_divergence: bool = True,
) -> typing.Iterator[np.ndarray]:
    """Yield X_0, X_η, ..., X_{steps·η}"""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    gen = as_generator(rng)
    dt = sys.eta / substeps
    x = np.array(x0, dtype=float)
    yield x
    for k in range(1, steps + 1):
        for _ in range(substeps):
            x = em_step(sys, x, dt, gen)
        if raise_on_divergence and not np.all(np.isfinite(x)):
            bad = np.flatnonzero(~np.all(np.isfinite(np.atleast_2d(x)), axis=-1))
            raise DivergenceError(k, [int(i) for i in bad])
        yield x


def em_integrate(
    sys: SdeSystem,
    x0: npt.ArrayLike,
    steps: int,
    cfg: SdeConfig | None,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """Trajectory sampled at t = kη, shape (steps + 1,) + x0.shape"""
    substeps = cfg.substeps if cfg is not None else 1
    return np.stack(list(em_iterate(sys, x0, steps, rng, substeps=substeps)))
