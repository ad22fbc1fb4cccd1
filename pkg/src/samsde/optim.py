# SPDX-License-Identifier: Apache-2.0
"""Discrete SAM-family update rules

Every rule works on one point of shape (d,) or a batch of shape (R, d).
P-variants replace the stochastic gradient by the full gradient plus the
injected noise Z of the same oracle draw, so with an additive Gaussian
oracle they coincide with their unperturbed counterparts.
"""

# Standard
import enum
import logging
import typing

# Third Party
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    field_validator,
)
import numpy as np
import numpy.typing as npt

# First Party
from samsde.core.rng import RngStream, as_generator
from samsde.models.base import LossModel
from samsde.models.oracle import AdditiveGaussian, Minibatch

logger = logging.getLogger(__name__)

DEFAULT_EPS_FLOOR = 1e-12


class Variant(str, enum.Enum):
    SGD = "SGD"
    SAM = "SAM"
    USAM = "USAM"
    DNSAM = "DNSAM"
    PGD = "PGD"
    PSAM = "PSAM"
    PUSAM = "PUSAM"
    PDNSAM = "PDNSAM"
    RSAM = "RSAM"

    @classmethod
    def parse(cls, name: "str | Variant") -> "Variant":
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper()
        key = ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(
                f"unknown optimizer {name!r}, choose from {', '.join(v.value for v in cls)}"
            )

    @property
    def perturbed(self) -> bool:
        return self in _PERTURBED

    @property
    def base(self) -> "Variant":
        """The unperturbed rule a P-variant is built on"""
        return _BASE.get(self, self)


ALIASES = {"GD": "SGD", "DNPSAM": "PDNSAM"}

_PERTURBED = frozenset({Variant.PGD, Variant.PSAM, Variant.PUSAM, Variant.PDNSAM})
_BASE = {
    Variant.PGD: Variant.SGD,
    Variant.PSAM: Variant.SAM,
    Variant.PUSAM: Variant.USAM,
    Variant.PDNSAM: Variant.DNSAM,
}


class OptimizerSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: Variant = Field(description="Update rule.")
    eta: PositiveFloat = Field(description="Step size η.")
    rho: NonNegativeFloat = Field(default=0.0, description="Ascent radius ρ.")
    eps_floor: PositiveFloat = Field(
        default=DEFAULT_EPS_FLOOR,
        description="Lower bound on gradient norms used for normalization.",
    )
    rsam_samples: PositiveInt = Field(
        default=8, description="Monte-Carlo perturbations per RSAM step."
    )
    rsam_sigma: NonNegativeFloat = Field(
        default=0.0, description="Standard deviation of the RSAM perturbations."
    )

    @field_validator("variant", mode="before")
    @classmethod
    def _parse_variant(cls, v: typing.Any) -> Variant:
        return Variant.parse(v)


def _norm(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(v, axis=-1, keepdims=True)


def step(
    spec: OptimizerSpec,
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    x: npt.ArrayLike,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """One update of ``spec.variant`` from x"""
    gen = as_generator(rng)
    xs = np.asarray(x, dtype=float)
    draw = oracle.draw(model, xs, gen)
    variant = spec.variant

    if variant is Variant.RSAM:
        # rows lead so that batched trajectories draw from their own streams
        perturb = spec.rsam_sigma * gen.standard_normal(
            xs.shape[:-1] + (spec.rsam_samples, xs.shape[-1])
        )
        total = np.zeros_like(xs)
        for s in range(spec.rsam_samples):
            total += draw.grad(xs + perturb[..., s, :])
        return xs - spec.eta * (total / spec.rsam_samples)

    descent: typing.Callable[[np.ndarray], np.ndarray]
    if variant.perturbed:
        z = draw.noise
        g = model.grad(xs) + z

        def descent(y: np.ndarray) -> np.ndarray:
            return model.grad(y) + z

    else:
        g = draw.grad(xs)
        descent = draw.grad

    base = variant.base
    if base is Variant.SGD:
        return xs - spec.eta * g
    if base is Variant.SAM:
        ascent = xs + spec.rho * g / np.maximum(_norm(g), spec.eps_floor)
    elif base is Variant.USAM:
        ascent = xs + spec.rho * g
    else:
        full_norm = _norm(model.grad(xs))
        ascent = xs + spec.rho * g / np.maximum(full_norm, spec.eps_floor)
    return xs - spec.eta * descent(ascent)


def iterate(
    spec: OptimizerSpec,
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    x0: npt.ArrayLike,
    steps: int,
    rng: RngStream | np.random.Generator,
) -> typing.Iterator[np.ndarray]:
    """Yield x_0, x_1, ..., x_steps"""
    gen = as_generator(rng)
    x = np.array(x0, dtype=float)
    yield x
    for _ in range(steps):
        x = step(spec, model, oracle, x, gen)
        yield x


def trajectory(
    spec: OptimizerSpec,
    model: LossModel,
    oracle: AdditiveGaussian | Minibatch,
    x0: npt.ArrayLike,
    steps: int,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """Stacked iterates, shape (steps + 1,) + x0.shape"""
    return np.stack(list(iterate(spec, model, oracle, x0, steps, rng)))
