# SPDX-License-Identifier: Apache-2.0
"""Known experiment kinds"""

# Standard
import dataclasses
import fnmatch
import typing

# Local
from . import params, suites
from .params import ParamsBase
from .report import Report


@dataclasses.dataclass(frozen=True)
class Experiment:
    kind: str
    params_cls: type[ParamsBase]
    runner: typing.Callable[[typing.Any, suites.RunContext], Report]
    reproduces: str
    # plot names written as plot-<name>.svg; * stands for a swept value
    figures: tuple[str, ...] = ()

    @property
    def description(self) -> str:
        doc = self.params_cls.__doc__ or ""
        return doc.strip().splitlines()[0] if doc.strip() else ""

    def default_params(self) -> ParamsBase:
        return self.params_cls()

    def writes_plot(self, name: str) -> bool:
        return any(fnmatch.fnmatchcase(name, pattern) for pattern in self.figures)


def _experiment(
    cls: type[ParamsBase],
    runner: typing.Callable[[typing.Any, suites.RunContext], Report],
    reproduces: str,
    figures: tuple[str, ...],
) -> Experiment:
    kind = cls.model_fields["kind"].default
    return Experiment(kind, cls, runner, reproduces, figures)


REGISTRY: dict[str, Experiment] = {
    e.kind: e
    for e in (
        _experiment(
            params.ValidateSdeParams,
            suites.run_validate_sde,
            "weak error of the SAM-family SDEs against the SDE of SGD",
            ("rho=*-*-g1",),
        ),
        _experiment(
            params.InterplayHessianParams,
            suites.run_interplay_hessian,
            "SGD against SAM-family losses as the Hessian grows",
            ("loss", "ratio"),
        ),
        _experiment(
            params.InterplayRhoParams,
            suites.run_interplay_rho,
            "SAM-family losses as the ascent radius grows",
            ("loss", "ratio"),
        ),
        _experiment(
            params.StationaryBallParams,
            suites.run_stationary_ball,
            "DNSAM trajectories jumping in and out of a ball at the critical point",
            ("inside", "jumps"),
        ),
        _experiment(
            params.SaddleEscape2dParams,
            suites.run_saddle_escape_2d,
            "full-batch SAM stuck at a 2-d saddle while the others escape",
            ("distance",),
        ),
        _experiment(
            params.SaddleEscapeHighDimParams,
            suites.run_saddle_escape_highdim,
            "saddle escape in 400 dimensions from ever closer starts",
            ("distance-scale=*",),
        ),
        _experiment(
            params.AutoencoderSaddleParams,
            suites.run_autoencoder_saddle,
            "SAM failing to leave the origin of a linear autoencoder",
            ("loss-scale=*", "compare"),
        ),
        _experiment(
            params.EmbeddedSaddleParams,
            suites.run_embedded_saddle,
            "SAM attracted by a saddle inside a quartic basin",
            ("loss-scale=*", "compare"),
        ),
        _experiment(
            params.SuboptimalityParams,
            suites.run_suboptimality,
            "long-run loss of the quadratic USAM SDE against its closed form",
            ("loss",),
        ),
    )
}


def get_experiment(kind: str) -> Experiment:
    try:
        return REGISTRY[kind]
    except KeyError:
        raise KeyError(
            f"unknown experiment kind {kind!r}, choose from {', '.join(REGISTRY)}"
        ) from None