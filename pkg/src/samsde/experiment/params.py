# SPDX-License-Identifier: Apache-2.0
"""Parameter sections of the experiment kinds

Field defaults are the desk-scale settings. ``PAPER_SCALE`` lists the
fields that ``--paper-scale`` raises to full-size ensembles; fields
set explicitly in a config file are never overridden.
"""

# Standard
import math
import typing

# Third Party
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    field_validator,
    model_validator,
)

# First Party
from samsde.models.oracle import AdditiveGaussian, GradOracle
from samsde.optim import Variant

Landscape = typing.Literal["saddle", "convex"]
_P = typing.TypeVar("_P", bound="ParamsBase")


def _parse_variants(values: typing.Any) -> typing.Any:
    if isinstance(values, (list, tuple)):
        return [Variant.parse(v) for v in values]
    return values


class ParamsBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {}

    def at_paper_scale(self: _P) -> _P:
        update = {k: v for k, v in self.PAPER_SCALE.items() if k not in self.model_fields_set}
        return self.model_copy(update=update)


class _AscentParams(ParamsBase):
    eta: PositiveFloat = Field(default=1e-3, description="Learning rate η.")
    rho: NonNegativeFloat | None = Field(
        default=None, description="Ascent radius ρ. Unset means ρ = √η."
    )

    @property
    def rho_value(self) -> float:
        return math.sqrt(self.eta) if self.rho is None else self.rho


class ValidateSdeParams(ParamsBase):
    """Weak error of each SDE against its discrete algorithm and against SGD's SDE"""

    kind: typing.Literal["validate-sde"] = "validate-sde"
    problem: typing.Literal[
        "quadratic", "linear-classifier", "logistic-classifier", "teacher-student"
    ] = Field(default="quadratic", description="Loss landscape.")
    dim: PositiveInt = Field(
        default=20, description="Dimension of the quadratic, H = AAᵀ/(2d)."
    )
    dataset: str | None = Field(
        default=None,
        description=(
            "CSV file for the classifier problems (header row, label in the last "
            "column). Unset means a synthetic Gaussian-blob surrogate."
        ),
    )
    n_samples: PositiveInt = Field(
        default=60, description="Rows of the synthetic classifier or teacher-student data."
    )
    n_features: PositiveInt = Field(
        default=4, description="Features of the synthetic classifier data."
    )
    n_classes: PositiveInt = Field(
        default=3, description="Classes of the synthetic linear-classifier data."
    )
    depth: PositiveInt = Field(
        default=2, description="Hidden layers of the teacher and student networks."
    )
    width: PositiveInt = Field(
        default=10, description="Width of the teacher and student hidden layers."
    )
    hidden_width: PositiveInt | None = Field(
        default=None,
        description="Hidden layer width of the classifiers; unset means one unit per feature.",
    )
    eta: PositiveFloat = Field(default=0.01, description="Learning rate η.")
    oracle: GradOracle = Field(
        default_factory=lambda: AdditiveGaussian(scale=0.01),
        description="Gradient noise model.",
    )
    rhos: list[NonNegativeFloat] = Field(
        default_factory=lambda: [0.001, 0.01, 0.1, 0.5],
        description="Ascent radii ρ to sweep.",
    )
    algorithms: list[Variant] = Field(
        default_factory=lambda: [Variant.USAM, Variant.DNSAM, Variant.SAM],
        description="Discrete algorithms to approximate.",
    )
    drift_only: bool = Field(
        default=True,
        description="Also compare the drift-only USAM and DNSAM SDEs.",
    )
    x0_scale: PositiveFloat = Field(
        default=1.0,
        description="Start at x0_scale·1 (quadratic) or at Gaussian weights of this scale.",
    )
    runs: PositiveInt = Field(default=64, description="Trajectories per ensemble.")
    steps: PositiveInt = Field(default=1000, description="Iterations per trajectory.")
    repeats: PositiveInt = Field(
        default=1, description="Independent repetitions; weak errors are averaged."
    )
    mc_samples: PositiveInt = Field(
        default=64, description="Oracle draws per Monte-Carlo expectation in the SDEs."
    )
    substeps: PositiveInt = Field(
        default=1, description="Euler-Maruyama substeps per learning-rate step."
    )
    indefinite: typing.Literal["raise", "clip"] = Field(
        default="clip",
        description="Handling of indefinite assembled diffusion covariances.",
    )

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {
        "runs": 200,
        "repeats": 3,
        "depth": 20,
    }

    @field_validator("algorithms", mode="before")
    @classmethod
    def _parse_algorithms(cls, v: typing.Any) -> typing.Any:
        return _parse_variants(v)


class _InterplayParams(_AscentParams):
    dim: PositiveInt = Field(default=100, description="Dimension of the diagonal H.")
    noise: NonNegativeFloat = Field(default=0.01, description="Gradient noise scale ς.")
    scales: list[PositiveFloat] = Field(
        default_factory=lambda: [1.0, 2.0, 4.0], description="Scale factors to sweep."
    )
    optimizer: Variant = Field(
        default=Variant.DNSAM, description="SAM-family optimizer compared with SGD."
    )
    x0_value: float = Field(default=0.02, description="Start at x0_value·1.")
    runs: PositiveInt = Field(default=5, description="Trajectories per ensemble.")
    steps: PositiveInt = Field(default=5000, description="Iterations per trajectory.")

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {"steps": 20000}

    @field_validator("optimizer", mode="before")
    @classmethod
    def _parse_optimizer(cls, v: typing.Any) -> Variant:
        return Variant.parse(v)


class InterplayHessianParams(_InterplayParams):
    """SGD against a SAM-family optimizer as H is scaled up"""

    kind: typing.Literal["interplay-hessian"] = "interplay-hessian"


class InterplayRhoParams(_InterplayParams):
    """SGD against a SAM-family optimizer as ρ is scaled up"""

    kind: typing.Literal["interplay-rho"] = "interplay-rho"


class StationaryBallParams(_AscentParams):
    """Occupancy of a small ball around the critical point of a 2-d quadratic"""

    kind: typing.Literal["stationary-ball"] = "stationary-ball"
    landscape: Landscape = Field(
        default="saddle", description="H = diag(1, -1) (saddle) or diag(1, 1) (convex)."
    )
    dynamics: typing.Literal["sde", "discrete"] = Field(
        default="sde", description="Simulate the DNSAM SDE or a discrete optimizer."
    )
    optimizer: Variant = Field(
        default=Variant.DNSAM, description="Discrete optimizer when dynamics is discrete."
    )
    noise: NonNegativeFloat = Field(default=0.01, description="Gradient noise scale ς.")
    x0: tuple[float, float] = Field(default=(0.02, 0.02), description="Start point.")
    radius: PositiveFloat = Field(default=0.007, description="Ball radius r.")
    window: PositiveInt = Field(
        default=1000, description="Iterations per jump-count window."
    )
    trend_window: PositiveInt = Field(
        default=5000, description="Iterations per window of the outside-count trend."
    )
    runs: PositiveInt = Field(default=10_000, description="Trajectories.")
    steps: PositiveInt = Field(default=50_000, description="Iterations per trajectory.")

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {"runs": 100_000}

    @field_validator("optimizer", mode="before")
    @classmethod
    def _parse_optimizer(cls, v: typing.Any) -> Variant:
        return Variant.parse(v)


class _EscapeParams(_AscentParams):
    noise: NonNegativeFloat = Field(
        default=0.01, description="Gradient noise scale ς of the stochastic optimizers."
    )
    full_batch: list[Variant] = Field(
        default_factory=lambda: [Variant.SGD, Variant.USAM, Variant.SAM],
        description="Optimizers run with exact gradients.",
    )
    runs: PositiveInt = Field(default=3, description="Trajectories per optimizer.")

    @field_validator("full_batch", mode="before")
    @classmethod
    def _parse_full_batch(cls, v: typing.Any) -> typing.Any:
        return _parse_variants(v)

    def noise_for(self, variant: Variant) -> float:
        return 0.0 if variant in self.full_batch else self.noise


class SaddleEscape2dParams(_EscapeParams):
    """Escape from the 2-d quadratic saddle along its unstable direction"""

    kind: typing.Literal["saddle-escape-2d"] = "saddle-escape-2d"
    x0: tuple[float, float] = Field(default=(0.0, 0.01), description="Start point.")
    optimizers: list[Variant] = Field(
        default_factory=lambda: [
            Variant.SGD,
            Variant.USAM,
            Variant.SAM,
            Variant.PGD,
            Variant.PUSAM,
            Variant.PDNSAM,
            Variant.PSAM,
        ],
        description="Optimizers to compare.",
    )
    steps: PositiveInt = Field(default=10_000, description="Iterations per trajectory.")

    @field_validator("optimizers", mode="before")
    @classmethod
    def _parse_optimizers(cls, v: typing.Any) -> typing.Any:
        return _parse_variants(v)


class SaddleEscapeHighDimParams(_EscapeParams):
    """Escape from a high-dimensional quadratic saddle started closer and closer to it"""

    kind: typing.Literal["saddle-escape-highdim"] = "saddle-escape-highdim"
    dim: PositiveInt = Field(default=400, description="Dimension of the diagonal H.")
    n_negative: NonNegativeInt = Field(
        default=10, description="Smallest eigenvalues whose sign is flipped."
    )
    scales: list[PositiveFloat] = Field(
        default_factory=lambda: [1.0, 1e-4, 1e-8], description="Start at scale·1."
    )
    optimizers: list[Variant] = Field(
        default_factory=lambda: [Variant.SAM, Variant.PSAM, Variant.PDNSAM],
        description="Optimizers to compare.",
    )
    steps: PositiveInt = Field(default=10_000, description="Iterations per trajectory.")

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {"steps": 50_000}

    @field_validator("optimizers", mode="before")
    @classmethod
    def _parse_optimizers(cls, v: typing.Any) -> typing.Any:
        return _parse_variants(v)

    @model_validator(mode="after")
    def _check_negative(self) -> "SaddleEscapeHighDimParams":
        if self.n_negative > self.dim:
            raise ValueError(f"n_negative ({self.n_negative}) exceeds dim ({self.dim})")
        return self


class _InitSweepParams(_EscapeParams):
    scales: list[PositiveFloat] = Field(
        default_factory=lambda: [1e-2, 5e-3, 1e-3, 1e-4, 1e-5],
        description="Scales σ of the Gaussian initialization.",
    )
    optimizers: list[Variant] = Field(
        default_factory=lambda: [Variant.SAM, Variant.DNSAM, Variant.PSAM],
        description="Optimizers swept over every scale.",
    )
    compare: list[Variant] = Field(
        default_factory=lambda: [
            Variant.SGD,
            Variant.USAM,
            Variant.SAM,
            Variant.PGD,
            Variant.PUSAM,
            Variant.DNSAM,
            Variant.PSAM,
        ],
        description="Optimizers compared at compare_scale.",
    )
    compare_scale: PositiveFloat = Field(
        default=1e-5, description="Initialization scale of the comparison."
    )

    @field_validator("optimizers", "compare", mode="before")
    @classmethod
    def _parse_lists(cls, v: typing.Any) -> typing.Any:
        return _parse_variants(v)


class AutoencoderSaddleParams(_InitSweepParams):
    """Linear autoencoder ‖W₂W₁ − I‖²_F started near its origin saddle"""

    kind: typing.Literal["autoencoder-saddle"] = "autoencoder-saddle"
    dim: PositiveInt = Field(default=20, description="Size d of the square matrices.")
    steps: PositiveInt = Field(default=10_000, description="Iterations per trajectory.")

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {"steps": 50_000}


class EmbeddedSaddleParams(_InitSweepParams):
    """½xᵀHx + λΣxᵢ⁴ with a few negative eigenvalues, started near the origin"""

    kind: typing.Literal["embedded-saddle"] = "embedded-saddle"
    dim: PositiveInt = Field(default=400, description="Dimension of the diagonal H.")
    n_negative: NonNegativeInt = Field(
        default=10, description="Smallest eigenvalues whose sign is flipped."
    )
    lam: NonNegativeFloat = Field(default=0.001, description="Quartic weight λ.")
    eta: PositiveFloat = Field(default=0.005, description="Learning rate η.")
    steps: PositiveInt = Field(default=20_000, description="Iterations per trajectory.")

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {"steps": 200_000}


class SuboptimalityParams(ParamsBase):
    """Long-run loss of the quadratic USAM SDE with Σ = H"""

    kind: typing.Literal["suboptimality"] = "suboptimality"
    dim: PositiveInt = Field(default=3, description="Dimension of H = AAᵀ/(2d).")
    eta: PositiveFloat = Field(default=0.01, description="Learning rate η.")
    rhos: list[NonNegativeFloat] = Field(
        default_factory=lambda: [0.0, 0.05, 0.1, 0.2], description="Ascent radii ρ."
    )
    runs: PositiveInt = Field(default=256, description="Trajectories per ρ.")
    steps: PositiveInt = Field(default=20_000, description="Iterations per trajectory.")
    burn_in: NonNegativeInt = Field(
        default=5000, description="Leading iterations excluded from the long-run mean."
    )

    PAPER_SCALE: typing.ClassVar[dict[str, typing.Any]] = {"runs": 1024}

    @model_validator(mode="after")
    def _check_burn_in(self) -> "SuboptimalityParams":
        if self.burn_in >= self.steps:
            raise ValueError(f"burn_in ({self.burn_in}) must be < steps ({self.steps})")
        return self


ExperimentParams = typing.Annotated[
    typing.Union[
        ValidateSdeParams,
        InterplayHessianParams,
        InterplayRhoParams,
        StationaryBallParams,
        SaddleEscape2dParams,
        SaddleEscapeHighDimParams,
        AutoencoderSaddleParams,
        EmbeddedSaddleParams,
        SuboptimalityParams,
    ],
    Field(discriminator="kind"),
]
