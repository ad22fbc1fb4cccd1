# SPDX-License-Identifier: Apache-2.0

# Third Party
from pydantic import ValidationError
import numpy as np
import pytest

# First Party
from samsde.core.errors import (
    DivergenceError,
    IndefiniteCovarianceError,
    OracleKindError,
)
from samsde.core.rng import RngStream
from samsde.models import AdditiveGaussian, Minibatch, QuadraticModel
from samsde.optim import OptimizerSpec, trajectory
from samsde.sde import (
    SdeConfig,
    SdeVariant,
    build_sde,
    em_integrate,
    em_iterate,
    em_step,
    expected_grad_norm,
)

H = np.diag([1.0, 2.0])
ETA = 0.01


def system(variant, h=H, scale=1.0, **kwargs):
    cfg = SdeConfig(variant=variant, eta=ETA, **kwargs)
    return build_sde(variant, QuadraticModel(h), AdditiveGaussian(scale=scale), cfg)


def covariance(sys, x, seed=0):
    root = sys.diffusion_sqrt(np.asarray(x, dtype=float), np.random.default_rng(seed))
    return root @ np.swapaxes(root, -1, -2) / ETA


class TestBuild:
    def test_sgd(self, rng):
        sys = system(SdeVariant.SGD, scale=0.5)
        x = np.array([1.0, 1.0])
        np.testing.assert_allclose(sys.drift(x, rng), -H @ x)
        np.testing.assert_allclose(covariance(sys, x), 0.25 * np.eye(2))
        assert sys.name == "SGD-SDE"
        assert sys.eta == ETA

    def test_usam_simplified(self, rng):
        rho = 0.5
        sys = system(SdeVariant.USAM_SIMPLIFIED, rho=rho)
        x = np.array([1.0, -1.0])
        amp = np.eye(2) + rho * H
        np.testing.assert_allclose(sys.drift(x, rng), -amp @ H @ x)
        np.testing.assert_allclose(covariance(sys, x), amp @ amp)

    def test_usam_drift_only_keeps_sgd_noise(self):
        sys = system(SdeVariant.USAM_DRIFT_ONLY, rho=0.5)
        np.testing.assert_allclose(covariance(sys, np.ones(2)), np.eye(2))

    def test_dnsam(self, rng):
        rho = 0.2
        sys = system(SdeVariant.DNSAM, rho=rho)
        x = np.array([3.0, 4.0])
        g = H @ x
        c = rho / np.linalg.norm(g)
        np.testing.assert_allclose(sys.drift(x, rng), -(g + c * H @ g))
        amp = np.eye(2) + c * H
        np.testing.assert_allclose(covariance(sys, x), amp @ amp)

    def test_dnsam_floor_at_minimum(self, rng):
        sys = system(SdeVariant.DNSAM, rho=0.2)
        assert np.all(np.isfinite(sys.drift(np.zeros(2), rng)))

    def test_usam_general_matches_closed_form(self):
        rho = 0.1
        sys = system(SdeVariant.USAM_GENERAL, rho=rho, mc_samples=20_000)
        cov = covariance(sys, np.array([0.5, 0.5]))
        # I + 2ρH for unit additive noise
        np.testing.assert_allclose(cov, np.eye(2) + 2 * rho * H, atol=0.02)

    def test_sam_simplified_agrees_with_general_for_isotropic_noise(self):
        # Σ + ρ(HΣ̄ + Σ̄ᵀH) against Σ + ρ(Σ̄H + HΣ̄ᵀ); equal when Σ̄ is symmetric
        x = np.array([0.3, -0.2])
        kwargs = {"rho": 0.5, "scale": 0.5, "mc_samples": 20_000}
        general = covariance(system(SdeVariant.SAM_GENERAL, **kwargs), x, seed=5)
        simplified = covariance(system(SdeVariant.SAM_SIMPLIFIED, **kwargs), x, seed=5)
        np.testing.assert_allclose(simplified, general, atol=0.03)
        # and both differ from the SGD noise
        assert not np.allclose(general, 0.25 * np.eye(2), atol=0.03)

    @pytest.mark.parametrize(
        "variant", [v for v in SdeVariant if v is not SdeVariant.RSAM_DRIFT]
    )
    def test_zero_rho_reduces_to_sgd(self, variant, rng):
        sys = system(variant, scale=0.5, rho=0.0, mc_samples=8)
        for x in rng.standard_normal((5, 2)) * 3:
            np.testing.assert_allclose(sys.drift(x, rng), -H @ x, atol=1e-12)
            np.testing.assert_allclose(covariance(sys, x), 0.25 * np.eye(2), atol=1e-12)

    def test_dnsam_noise_grows_with_rho(self):
        x = np.array([0.3, 0.4])
        traces = [
            np.trace(covariance(system(SdeVariant.DNSAM, rho=rho), x))
            for rho in [0.0, 0.01, 0.05, 0.1, 0.5]
        ]
        assert traces[0] == pytest.approx(2.0)
        assert np.all(np.diff(traces) > 0)

    def test_batched_evaluation(self, rng):
        sys = system(SdeVariant.SAM_GENERAL, rho=0.1, mc_samples=16)
        xs = rng.standard_normal((5, 2))
        assert sys.drift(xs, rng).shape == (5, 2)
        assert sys.diffusion_sqrt(xs, rng).shape == (5, 2, 2)

    @pytest.mark.parametrize(
        "variant",
        [
            SdeVariant.USAM_SIMPLIFIED,
            SdeVariant.USAM_DRIFT_ONLY,
            SdeVariant.DNSAM,
            SdeVariant.DNSAM_DRIFT_ONLY,
            SdeVariant.SAM_SIMPLIFIED,
        ],
    )
    def test_constant_noise_needs_additive_oracle(self, variant):
        cfg = SdeConfig(variant=variant, eta=ETA, rho=0.1)
        with pytest.raises(OracleKindError, match=variant.value):
            build_sde(variant, QuadraticModel(H), Minibatch(), cfg)

    def test_rsam_drift_is_deterministic(self, rng):
        sys = system(SdeVariant.RSAM_DRIFT, rsam_sigma=0.3)
        x = np.array([1.0, 2.0])
        np.testing.assert_allclose(sys.drift(x, rng), -H @ x)
        np.testing.assert_array_equal(sys.diffusion_sqrt(x, rng), np.zeros((2, 2)))

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            SdeConfig(variant="Adam-SDE", eta=ETA)


class TestIndefinite:
    h = np.diag([1.0, -10.0])

    def test_raise(self):
        sys = system(SdeVariant.USAM_GENERAL, h=self.h, rho=1.0, mc_samples=4000)
        with pytest.raises(IndefiniteCovarianceError):
            covariance(sys, np.zeros(2))

    def test_clip(self):
        sys = system(
            SdeVariant.USAM_GENERAL,
            h=self.h,
            rho=1.0,
            mc_samples=4000,
            indefinite="clip",
        )
        cov = covariance(sys, np.zeros(2))
        assert np.linalg.eigvalsh(cov).min() >= -1e-12
        assert cov[1, 1] == pytest.approx(0.0, abs=0.05)
        assert cov[0, 0] == pytest.approx(3.0, rel=0.1)


class TestIntegration:
    def test_noiseless_sgd_sde_matches_gd(self):
        sys = system(SdeVariant.SGD, scale=0.0)
        x0 = np.array([1.0, -2.0])
        traj = em_integrate(sys, x0, 20, None, RngStream(0))
        spec = OptimizerSpec(variant="SGD", eta=ETA)
        gd = trajectory(spec, QuadraticModel(H), AdditiveGaussian(), x0, 20, RngStream(0))
        np.testing.assert_allclose(traj, gd)

    def test_substeps_refine_the_grid(self):
        x0 = np.array([1.0, -2.0])
        cfg = SdeConfig(variant=SdeVariant.SGD, eta=ETA, substeps=4)
        sys = build_sde(SdeVariant.SGD, QuadraticModel(H), AdditiveGaussian(), cfg)
        traj = em_integrate(sys, x0, 10, cfg, RngStream(0))
        assert traj.shape == (11, 2)
        step = np.linalg.matrix_power(np.eye(2) - ETA / 4 * H, 4)
        np.testing.assert_allclose(traj[1], step @ x0)

    def test_em_step_shapes(self, rng):
        sys = system(SdeVariant.SGD)
        xs = np.zeros((7, 2))
        assert em_step(sys, xs, ETA, rng).shape == (7, 2)

    def test_seeded(self):
        sys = system(SdeVariant.SGD)
        a = em_integrate(sys, np.ones(2), 5, None, RngStream(11))
        b = em_integrate(sys, np.ones(2), 5, None, RngStream(11))
        np.testing.assert_array_equal(a, b)

    def test_divergence(self):
        cfg = SdeConfig(variant=SdeVariant.SGD, eta=1.0)
        sys = build_sde(SdeVariant.SGD, QuadraticModel([[-1000.0]]), AdditiveGaussian(), cfg)
        with np.errstate(all="ignore"):
            with pytest.raises(DivergenceError) as exc:
                list(em_iterate(sys, np.ones((3, 1)), 500, RngStream(0)))
            assert exc.value.step <= 500
            assert exc.value.trajectories == [0, 1, 2]

            last = list(
                em_iterate(sys, [1.0], 500, RngStream(0), raise_on_divergence=False)
            )[-1]
        assert not np.all(np.isfinite(last))

    def test_needs_steps(self):
        with pytest.raises(ValueError):
            next(em_iterate(system(SdeVariant.SGD), np.zeros(2), 0, RngStream(0)))


def test_expected_grad_norm():
    model = QuadraticModel(H)
    x = np.array([3.0, 2.0])
    mean, se = expected_grad_norm(model, AdditiveGaussian(), x, RngStream(0), 8)
    assert mean == pytest.approx(5.0)
    assert se == pytest.approx(0.0, abs=1e-12)
