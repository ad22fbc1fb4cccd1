# SPDX-License-Identifier: Apache-2.0
"""Runners of the experiment kinds

Every runner takes its parameter section and a :class:`RunContext` and
returns a filled :class:`Report`. Ensembles draw their series index from the
context in a fixed order and every trajectory has its own stream, so the
trajectories are a function of (parameters, seed) only.
"""

# Standard
import collections
import dataclasses
import logging
import math
import typing

# Third Party
import numpy as np

# First Party
from samsde import analytic
from samsde.core.errors import IndefiniteCovarianceError, OracleKindError
from samsde.core.rng import RngStream
from samsde.harness.ensemble import (
    EnsembleSpec,
    EnsembleStats,
    X0Sampler,
    run_discrete_ensemble,
    run_sde_ensemble,
)
from samsde.harness.metrics import (
    TEST_FUNCTIONS,
    BallOccupancy,
    EscapeMetrics,
    Outcome,
    TestFunction,
    default_escape_thresholds,
    test_g2,
    weak_error_report,
)
from samsde.models import (
    AdditiveGaussian,
    EmbeddedSaddleModel,
    LinearAutoencoderModel,
    LossModel,
    MLPArchitecture,
    MLPModel,
    Minibatch,
    QuadraticModel,
    diagonal_hessian,
    load_dataset_csv,
    random_spd_hessian,
    synth_dataset,
    teacher_student_problem,
)
from samsde.optim import OptimizerSpec, Variant
from samsde.sde import SdeConfig, SdeVariant, build_sde

# Local
from .params import (
    AutoencoderSaddleParams,
    EmbeddedSaddleParams,
    InterplayHessianParams,
    InterplayRhoParams,
    SaddleEscape2dParams,
    SaddleEscapeHighDimParams,
    StationaryBallParams,
    SuboptimalityParams,
    ValidateSdeParams,
    _EscapeParams,
    _InitSweepParams,
    _InterplayParams,
)
from .report import Report

logger = logging.getLogger(__name__)

# stream reserved for setup randomness (Hessians, datasets, initializations)
_SETUP_SERIES = 0xFFFFFFFF


def distance(x: np.ndarray, model: LossModel) -> np.ndarray:
    """‖x‖, the distance from the critical point at the origin"""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


LOSS: dict[str, TestFunction] = {"loss": test_g2}
LOSS_AND_DISTANCE: dict[str, TestFunction] = {"loss": test_g2, "distance": distance}


@dataclasses.dataclass
class RunContext:
    seed: int
    chunk_size: int = 256
    threads: int = 1
    progress: bool = False
    _series: int = dataclasses.field(default=0, init=False, repr=False)

    def next_series(self) -> int:
        self._series += 1
        return self._series

    def ensemble(
        self,
        runs: int,
        steps: int,
        x0: typing.Any,
        *,
        keep_terminal: bool = False,
    ) -> EnsembleSpec:
        return EnsembleSpec(
            runs=runs,
            steps=steps,
            x0=x0,
            base_seed=self.seed,
            series=self.next_series(),
            chunk_size=self.chunk_size,
            threads=self.threads,
            keep_terminal=keep_terminal,
            progress=self.progress,
        )

    def setup_rng(self) -> np.random.Generator:
        return RngStream(self.seed, _SETUP_SERIES << 32).generator()


def _fmt(value: float) -> str:
    return format(value, "g")


def _tail_mean(values: np.ndarray, fraction: float = 0.1) -> float:
    """Mean over the last ``fraction`` of a series, at least one element"""
    count = max(1, int(len(values) * fraction))
    return float(np.mean(values[-count:]))


# -- validate-sde --


def matched_sde(variant: Variant, oracle: AdditiveGaussian | Minibatch) -> SdeVariant:
    """The SDE model that approximates a discrete algorithm"""
    base = variant.base
    if base is Variant.SGD:
        return SdeVariant.SGD
    if base is Variant.USAM:
        if isinstance(oracle, AdditiveGaussian):
            return SdeVariant.USAM_SIMPLIFIED
        return SdeVariant.USAM_GENERAL
    if base is Variant.DNSAM:
        return SdeVariant.DNSAM
    if base is Variant.SAM:
        return SdeVariant.SAM_GENERAL
    return SdeVariant.RSAM_DRIFT


def _candidates(p: ValidateSdeParams, variant: Variant) -> list[SdeVariant]:
    result = [matched_sde(variant, p.oracle)]
    if variant.base is Variant.SAM and isinstance(p.oracle, AdditiveGaussian):
        result.append(SdeVariant.SAM_SIMPLIFIED)
    if p.drift_only:
        if variant.base is Variant.USAM:
            result.append(SdeVariant.USAM_DRIFT_ONLY)
        elif variant.base is Variant.DNSAM:
            result.append(SdeVariant.DNSAM_DRIFT_ONLY)
    if SdeVariant.SGD not in result:
        result.append(SdeVariant.SGD)
    return result


def validation_problem(
    p: ValidateSdeParams, ctx: RunContext
) -> tuple[LossModel, np.ndarray]:
    """Loss model and start point of a validate-sde run"""
    setup = ctx.setup_rng()
    if p.problem == "quadratic":
        model: LossModel = QuadraticModel(random_spd_hessian(p.dim, setup))
        return model, np.full(model.dim, p.x0_scale)

    if p.problem == "teacher-student":
        dataset, _ = teacher_student_problem(
            n=p.n_samples, p=p.n_features, seed=ctx.seed, depth=p.depth, width=p.width
        )
        # linear teacher, sigmoid student
        arch = MLPArchitecture(
            widths=[p.width] * p.depth, activation="sigmoid", head="mse"
        )
    else:
        n_classes = p.n_classes if p.problem == "linear-classifier" else 2
        if p.dataset is not None:
            dataset = load_dataset_csv(p.dataset, labels="class")
        else:
            dataset = synth_dataset(
                "blobs", p.n_samples, p.n_features, ctx.seed, n_classes=n_classes
            )
        # one hidden layer: linear with cross-entropy, sigmoid with ℓ²-logistic
        linear = p.problem == "linear-classifier"
        arch = MLPArchitecture(
            widths=[p.hidden_width or dataset.p],
            activation="identity" if linear else "sigmoid",
            head="cross-entropy" if linear else "logistic-l2",
        )
    mlp = MLPModel(arch, dataset)
    logger.debug("%s problem on %s with %d parameters", p.problem, dataset.name, mlp.dim)
    return mlp, mlp.init_params(setup, p.x0_scale)


def run_validate_sde(p: ValidateSdeParams, ctx: RunContext) -> Report:
    report = Report(p.kind)
    model, x0 = validation_problem(p, ctx)
    report.add_summary("dim", model.dim)
    errors: dict[tuple, list] = collections.defaultdict(list)

    for rho in p.rhos:
        for variant in p.algorithms:
            label = f"rho={_fmt(rho)}/{variant.value}"
            plotted: list[str] = []
            spec = OptimizerSpec(variant=variant, eta=p.eta, rho=rho)
            for rep in range(p.repeats):
                discrete = run_discrete_ensemble(
                    spec, model, p.oracle, ctx.ensemble(p.runs, p.steps, x0)
                )
                if rep == 0:
                    report.add_stats(f"{label}/discrete", discrete)
                    plotted.append(f"{label}/discrete/g1")
                for sde_variant in _candidates(p, variant):
                    cfg = SdeConfig(
                        variant=sde_variant,
                        eta=p.eta,
                        rho=rho,
                        mc_samples=p.mc_samples,
                        substeps=p.substeps,
                        indefinite=p.indefinite,
                    )
                    ens = ctx.ensemble(p.runs, p.steps, x0)
                    try:
                        system = build_sde(sde_variant, model, p.oracle, cfg)
                        continuous = run_sde_ensemble(system, cfg, ens, model=model)
                    except (OracleKindError, IndefiniteCovarianceError) as exc:
                        logger.warning("%s against %s: %s", label, sde_variant.value, exc)
                        report.add_summary(f"{label}/{sde_variant.value}/error", str(exc))
                        continue
                    if rep == 0:
                        report.add_stats(f"{label}/{sde_variant.value}", continuous)
                        plotted.append(f"{label}/{sde_variant.value}/g1")
                    for g in TEST_FUNCTIONS:
                        key = (rho, variant.value, sde_variant.value, g)
                        errors[key].append(weak_error_report(discrete, continuous, g))
            report.add_plot(
                f"{label.replace('/', '-')}-g1",
                plotted,
                title=f"{variant.value}, ρ = {_fmt(rho)}: 𝔼g1",
                ylabel="g1",
            )

    rows = []
    for (rho, alg, sde_name, g), reports in errors.items():
        value = float(np.mean([r.value for r in reports]))
        se = float(np.mean([r.se for r in reports]))
        rows.append([rho, alg, sde_name, g, value, se, reports[0].step])
        report.add_summary(f"rho={_fmt(rho)}/{alg}/{sde_name}/{g}", value)
    report.add_table(
        "weak-errors",
        ["rho", "algorithm", "sde", "test_function", "weak_error", "se", "step"],
        rows,
    )
    return report


# -- interplay --


def _interplay(
    p: _InterplayParams, ctx: RunContext, scale_hessian: bool
) -> Report:
    report = Report(p.kind)
    h0 = diagonal_hessian(p.dim, ctx.setup_rng())
    x0 = np.full(p.dim, p.x0_value)
    oracle = AdditiveGaussian(scale=p.noise)
    curves: dict[tuple[float, Variant], np.ndarray] = {}

    def run(variant: Variant, scale: float) -> None:
        h = scale * h0 if scale_hessian else h0
        rho = p.rho_value * (1.0 if scale_hessian else scale)
        spec = OptimizerSpec(variant=variant, eta=p.eta, rho=rho)
        stats = run_discrete_ensemble(
            spec, QuadraticModel(h), oracle, ctx.ensemble(p.runs, p.steps, x0), LOSS
        )
        report.add_stats(f"scale={_fmt(scale)}/{variant.value}", stats)
        curves[(scale, variant)] = stats.mean["loss"]

    for scale in p.scales:
        if scale_hessian or scale == p.scales[0]:
            # ρ does not enter SGD
            run(Variant.SGD, scale)
        run(p.optimizer, scale)

    first = p.scales[0]
    reference_variant = Variant.SGD if scale_hessian else p.optimizer
    reference = curves[(first, reference_variant)]
    rows = []
    for (scale, variant), loss in curves.items():
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = loss / reference
        name = f"ratio/scale={_fmt(scale)}/{variant.value}"
        report.add_series(name, ratio)
        final = _tail_mean(loss)
        ratio_final = final / _tail_mean(reference)
        rows.append([scale, variant.value, final, ratio_final])
        report.add_summary(f"scale={_fmt(scale)}/{variant.value}/final_loss", final)
        report.add_summary(f"scale={_fmt(scale)}/{variant.value}/ratio", ratio_final)
    report.add_table(
        "interplay", ["scale", "optimizer", "final_loss", "ratio_to_reference"], rows
    )

    swept = "H" if scale_hessian else "ρ"
    report.add_plot(
        "loss",
        [f"scale={_fmt(s)}/{v.value}/loss" for s, v in curves],
        title=f"loss as {swept} is scaled",
        ylabel="f(x)",
        logy=True,
    )
    report.add_plot(
        "ratio",
        [f"ratio/scale={_fmt(s)}/{v.value}" for s, v in curves],
        title=f"loss relative to {reference_variant.value} at scale {_fmt(first)}",
        ylabel="ratio",
    )
    return report


def run_interplay_hessian(p: InterplayHessianParams, ctx: RunContext) -> Report:
    return _interplay(p, ctx, scale_hessian=True)


def run_interplay_rho(p: InterplayRhoParams, ctx: RunContext) -> Report:
    return _interplay(p, ctx, scale_hessian=False)


# -- stationary-ball --


def run_stationary_ball(p: StationaryBallParams, ctx: RunContext) -> Report:
    report = Report(p.kind)
    h = np.diag([1.0, -1.0] if p.landscape == "saddle" else [1.0, 1.0])
    model = QuadraticModel(h)
    oracle = AdditiveGaussian(scale=p.noise)
    rho = p.rho_value
    ens = ctx.ensemble(p.runs, p.steps, np.asarray(p.x0), keep_terminal=True)

    def observer(n: int, steps: int) -> BallOccupancy:
        return BallOccupancy(p.radius, n, steps)

    stats: EnsembleStats
    if p.dynamics == "sde":
        cfg = SdeConfig(variant=SdeVariant.DNSAM, eta=p.eta, rho=rho)
        system = build_sde(SdeVariant.DNSAM, model, oracle, cfg)
        stats = run_sde_ensemble(system, cfg, ens, LOSS, {"ball": observer})
        label = SdeVariant.DNSAM.value
    else:
        spec = OptimizerSpec(variant=p.optimizer, eta=p.eta, rho=rho)
        stats = run_discrete_ensemble(spec, model, oracle, ens, LOSS, {"ball": observer})
        label = p.optimizer.value

    occ: BallOccupancy = stats.observers["ball"]
    report.add_stats(label, stats)
    report.add_series("inside", occ.inside)
    report.add_series("jumps", occ.jumps)
    if stats.terminal is not None:
        report.set_terminal(stats.terminal)

    entered = occ.first_entry[occ.first_entry >= 0]
    report.add_summary("entered_fraction", occ.entered_fraction)
    if entered.size:
        report.add_summary("first_entry_min", int(entered.min()))
        report.add_summary("first_entry_mean", float(entered.mean()))
        report.add_summary("first_entry_max", int(entered.max()))

    jumps = occ.window_sums(occ.jumps, p.window)
    starts = np.arange(len(jumps)) * p.window + 1
    report.add_table(
        "jumps",
        ["window_start", "jumps", "mean_outside"],
        [
            [int(s), int(j), float(o)]
            for s, j, o in zip(
                starts, jumps, occ.window_means(occ.outside, p.window), strict=True
            )
        ],
    )
    # windows that begin once every trajectory has entered
    last_entry = int(entered.max()) if entered.size == occ.n_traj else p.steps
    after = jumps[starts > last_entry]
    if after.size:
        report.add_summary(
            "post_entry_windows_with_jumps", float(np.count_nonzero(after > 0)) / after.size
        )

    trend = occ.window_means(occ.outside, p.trend_window)
    if len(trend) > 1:
        rising = np.count_nonzero(np.diff(trend) >= 0)
        report.add_summary("outside_trend_nondecreasing", rising / (len(trend) - 1))

    report.add_plot(
        "inside", ["inside"], title=f"trajectories within r = {_fmt(p.radius)}", ylabel="count"
    )
    report.add_plot("jumps", ["jumps"], title="ball entries plus exits", ylabel="count")
    return report


# -- saddle escape --


def _escape_run(
    p: _EscapeParams,
    ctx: RunContext,
    report: Report,
    model: LossModel,
    x0: np.ndarray,
    variant: Variant,
    prefix: str,
) -> list[typing.Any]:
    far, near = default_escape_thresholds(x0)

    def observer(n: int, steps: int) -> EscapeMetrics:
        return EscapeMetrics(far, near, n, steps)

    noise = p.noise_for(variant)
    spec = OptimizerSpec(variant=variant, eta=p.eta, rho=p.rho_value)
    stats = run_discrete_ensemble(
        spec,
        model,
        AdditiveGaussian(scale=noise),
        ctx.ensemble(p.runs, p.steps, x0),
        LOSS_AND_DISTANCE,
        {"escape": observer},
    )
    report.add_stats(prefix, stats)
    metrics: EscapeMetrics = stats.observers["escape"]
    counts = metrics.counts()
    for outcome in Outcome:
        report.add_summary(f"{prefix}/{outcome.value}", counts[outcome])
    escaped = metrics.first_escape[metrics.first_escape >= 0]
    first = int(escaped.min()) if escaped.size else -1
    report.add_summary(f"{prefix}/first_escape", first)
    return [
        variant.value,
        noise,
        counts[Outcome.STUCK],
        counts[Outcome.ESCAPED],
        counts[Outcome.RETURNED],
        first,
    ]


_ESCAPE_HEADERS = ["optimizer", "noise", "stuck", "escaped", "returned", "first_escape"]


def run_saddle_escape_2d(p: SaddleEscape2dParams, ctx: RunContext) -> Report:
    report = Report(p.kind)
    model = QuadraticModel(np.diag([1.0, -1.0]))
    x0 = np.asarray(p.x0, dtype=float)
    rows = [
        _escape_run(p, ctx, report, model, x0, v, v.value) for v in p.optimizers
    ]
    report.add_table("escape", _ESCAPE_HEADERS, rows)
    report.add_plot(
        "distance",
        [f"{v.value}/distance" for v in p.optimizers],
        title="distance from the saddle",
        ylabel="‖x‖",
        logy=True,
    )
    return report


def run_saddle_escape_highdim(p: SaddleEscapeHighDimParams, ctx: RunContext) -> Report:
    report = Report(p.kind)
    model = QuadraticModel(diagonal_hessian(p.dim, ctx.setup_rng(), p.n_negative))
    rows = []
    for scale in p.scales:
        x0 = np.full(p.dim, scale)
        names = []
        for variant in p.optimizers:
            prefix = f"scale={_fmt(scale)}/{variant.value}"
            rows.append([scale, *_escape_run(p, ctx, report, model, x0, variant, prefix)])
            names.append(f"{prefix}/distance")
        report.add_plot(
            f"distance-scale={_fmt(scale)}",
            names,
            title=f"distance from the saddle, x0 = {_fmt(scale)}·1",
            ylabel="‖x‖",
            logy=True,
        )
    report.add_table("escape", ["scale", *_ESCAPE_HEADERS], rows)
    return report


# -- initialization sweeps --


def _gaussian_init(model: LossModel, scale: float) -> X0Sampler:
    def sample(gen: np.random.Generator, n: int) -> np.ndarray:
        return scale * gen.standard_normal((n, model.dim))

    return sample


def _init_sweep(p: _InitSweepParams, ctx: RunContext, model: LossModel) -> Report:
    report = Report(p.kind)
    done: dict[tuple[float, Variant], list[typing.Any]] = {}
    plan = [(s, v) for s in p.scales for v in p.optimizers]
    plan += [(p.compare_scale, v) for v in p.compare]

    for scale, variant in plan:
        if (scale, variant) in done:
            continue
        prefix = f"scale={_fmt(scale)}/{variant.value}"
        sampler = _gaussian_init(model, scale)
        spec = OptimizerSpec(variant=variant, eta=p.eta, rho=p.rho_value)
        stats = run_discrete_ensemble(
            spec,
            model,
            AdditiveGaussian(scale=p.noise_for(variant)),
            ctx.ensemble(p.runs, p.steps, sampler),
            LOSS_AND_DISTANCE,
        )
        report.add_stats(prefix, stats)
        loss = stats.mean["loss"]
        initial, final = float(loss[0]), float(loss[-1])
        decrease = initial - final
        relative = decrease / abs(initial) if initial != 0 else math.nan
        report.add_summary(f"{prefix}/relative_decrease", relative)
        done[(scale, variant)] = [scale, variant.value, initial, final, decrease, relative]

    report.add_table(
        "loss",
        ["scale", "optimizer", "initial_loss", "final_loss", "decrease", "relative_decrease"],
        list(done.values()),
    )
    for scale in p.scales:
        report.add_plot(
            f"loss-scale={_fmt(scale)}",
            [f"scale={_fmt(scale)}/{v.value}/loss" for v in p.optimizers],
            title=f"loss from initialization scale {_fmt(scale)}",
            ylabel="f(x)",
        )
    report.add_plot(
        "compare",
        [f"scale={_fmt(p.compare_scale)}/{v.value}/loss" for v in p.compare],
        title=f"optimizers from initialization scale {_fmt(p.compare_scale)}",
        ylabel="f(x)",
    )
    return report


def run_autoencoder_saddle(p: AutoencoderSaddleParams, ctx: RunContext) -> Report:
    return _init_sweep(p, ctx, LinearAutoencoderModel(p.dim))


def run_embedded_saddle(p: EmbeddedSaddleParams, ctx: RunContext) -> Report:
    h = diagonal_hessian(p.dim, ctx.setup_rng(), p.n_negative)
    return _init_sweep(p, ctx, EmbeddedSaddleModel(h, p.lam))


# -- suboptimality --


def run_suboptimality(p: SuboptimalityParams, ctx: RunContext) -> Report:
    report = Report(p.kind)
    h = random_spd_hessian(p.dim, ctx.setup_rng())
    model = QuadraticModel(h)
    rows = []
    for rho in p.rhos:
        system = analytic.usam_quadratic_sde(h, rho, p.eta, h)
        ens = ctx.ensemble(p.runs, p.steps, np.zeros(p.dim))
        stats = run_sde_ensemble(system, None, ens, LOSS, model=model)
        prefix = f"rho={_fmt(rho)}"
        report.add_stats(prefix, stats)

        tail = slice(p.burn_in + 1, None)
        simulated = float(np.mean(stats.mean["loss"][tail]))
        se = float(np.mean(stats.se["loss"][tail]))
        formula = analytic.usam_suboptimality(h, rho, p.eta)
        exact = analytic.usam_stationary_loss(h, rho, p.eta, h)
        rel = abs(simulated - exact) / exact
        rows.append([rho, simulated, se, exact, formula, rel])
        report.add_summary(f"{prefix}/simulated", simulated)
        report.add_summary(f"{prefix}/exact", exact)
        report.add_summary(f"{prefix}/formula", formula)
        report.add_summary(f"{prefix}/relative_error", rel)
    report.add_table(
        "suboptimality",
        ["rho", "simulated", "se", "exact", "formula", "relative_error"],
        rows,
    )
    report.add_plot(
        "loss",
        [f"rho={_fmt(rho)}/loss" for rho in p.rhos],
        title="loss of the quadratic USAM SDE with Σ = H",
        ylabel="f(x)",
    )
    return report
