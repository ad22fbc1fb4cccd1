# SPDX-License-Identifier: Apache-2.0

# Third Party
import numpy as np
import pytest

# First Party
from samsde.core.errors import DimensionMismatchError, NotSymmetricError
from samsde.models import (
    EmbeddedSaddleModel,
    LinearAutoencoderModel,
    LossModel,
    MLPArchitecture,
    MLPModel,
    QuadraticModel,
    diagonal_hessian,
    random_spd_hessian,
    synth_dataset,
)
from samsde.models.base import Indices


def fd_grad(model: LossModel, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    out = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (model.value(x + e) - model.value(x - e)) / (2 * h)
    return out


class Cubic(LossModel):
    """Σ xᵢ³/3, looped row by row"""

    vectorized = False

    def __init__(self, dim: int) -> None:
        self.dim = dim

    def _value(self, x: np.ndarray, indices: Indices) -> float:
        return float(np.sum(x**3) / 3.0)

    def _grad(self, x: np.ndarray, indices: Indices) -> np.ndarray:
        return x**2


class TestQuadratic:
    def test_values(self):
        model = QuadraticModel(np.eye(2))
        x = np.array([3.0, 4.0])
        assert model.value(x) == pytest.approx(12.5)
        np.testing.assert_allclose(model.grad(x), x)

    def test_batched(self, rng):
        h = random_spd_hessian(4, rng)
        model = QuadraticModel(h)
        xs = rng.standard_normal((5, 4))
        assert model.value(xs).shape == (5,)
        assert model.grad(xs).shape == (5, 4)
        assert model.hessian(xs).shape == (5, 4, 4)
        np.testing.assert_allclose(model.hvp(xs, xs), xs @ h)
        np.testing.assert_allclose(model.trace_hessian_grad(xs), 0.0)

    def test_grad_matches_fd(self, rng):
        model = QuadraticModel(random_spd_hessian(5, rng))
        x = rng.standard_normal(5)
        np.testing.assert_allclose(model.grad(x), fd_grad(model, x), atol=1e-6)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError, match="dimension 2"):
            QuadraticModel(np.eye(2)).grad(np.zeros(3))

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetricError):
            QuadraticModel([[1.0, 1.0], [0.0, 1.0]])


class TestHessianHelpers:
    def test_random_spd(self, rng):
        h = random_spd_hessian(6, rng)
        assert np.linalg.eigvalsh(h).min() > 0

    def test_diagonal_negative(self, rng):
        h = diagonal_hessian(10, rng, n_negative=3)
        eig = np.diag(h)
        assert np.count_nonzero(eig < 0) == 3
        # the flipped ones are the smallest in magnitude
        assert np.abs(eig[eig < 0]).max() <= eig[eig > 0].min()

    def test_diagonal_bad_count(self, rng):
        with pytest.raises(ValueError):
            diagonal_hessian(3, rng, n_negative=4)


class TestEmbeddedSaddle:
    def test_derivatives(self, rng):
        model = EmbeddedSaddleModel(diagonal_hessian(6, rng, n_negative=2), lam=0.3)
        x = rng.standard_normal(6)
        np.testing.assert_allclose(model.grad(x), fd_grad(model, x), atol=1e-5)
        v = rng.standard_normal(6)
        np.testing.assert_allclose(model.hvp(x, v), model.hessian(x) @ v, atol=1e-10)
        np.testing.assert_allclose(model.trace_hessian_grad(x), 24 * 0.3 * x)

    def test_origin_is_critical(self, rng):
        model = EmbeddedSaddleModel(diagonal_hessian(4, rng, n_negative=1), lam=0.1)
        np.testing.assert_allclose(model.grad(np.zeros(4)), 0.0)

    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            EmbeddedSaddleModel(np.eye(2), lam=-1.0)


class TestFiniteDifferenceBase:
    def test_hessian_symmetric_and_correct(self, rng):
        model = Cubic(3)
        x = rng.standard_normal(3)
        hess = model.hessian(x)
        np.testing.assert_allclose(hess, hess.T)
        np.testing.assert_allclose(hess, np.diag(2 * x), atol=1e-6)

    def test_hvp(self, rng):
        model = Cubic(3)
        x, v = rng.standard_normal(3), rng.standard_normal(3)
        np.testing.assert_allclose(model.hvp(x, v), 2 * x * v, atol=1e-6)
        np.testing.assert_allclose(model.hvp(x, np.zeros(3)), 0.0)

    def test_trace_hessian_grad(self, rng):
        model = Cubic(4)
        x = rng.standard_normal(4)
        np.testing.assert_allclose(model.trace_hessian_grad(x), 2.0, atol=1e-4)

    def test_rowwise(self, rng):
        model = Cubic(2)
        xs = rng.standard_normal((3, 2))
        np.testing.assert_allclose(model.grad(xs), xs**2)
        np.testing.assert_allclose(model.value(xs), np.sum(xs**3, axis=1) / 3)

    def test_no_examples(self):
        with pytest.raises(TypeError):
            Cubic(2).per_example_grads(np.zeros(2))


class TestAutoencoder:
    def test_origin(self):
        model = LinearAutoencoderModel(3)
        zero = np.zeros(model.dim)
        assert model.value(zero) == pytest.approx(3.0)
        np.testing.assert_allclose(model.grad(zero), 0.0)

    def test_identity_is_minimum(self):
        model = LinearAutoencoderModel(2)
        x = model.pack(np.eye(2), np.eye(2))
        assert model.value(x) == pytest.approx(0.0)

    def test_derivatives(self, rng):
        model = LinearAutoencoderModel(3)
        x = model.init_params(rng, 0.5)
        assert x.shape == (18,)
        np.testing.assert_allclose(model.grad(x), fd_grad(model, x), atol=1e-5)
        v = rng.standard_normal(model.dim)
        fd = (model.grad(x + 1e-6 * v) - model.grad(x - 1e-6 * v)) / 2e-6
        np.testing.assert_allclose(model.hvp(x, v), fd, atol=1e-5)

    def test_batched(self, rng):
        model = LinearAutoencoderModel(2)
        xs = rng.standard_normal((4, model.dim))
        assert model.grad(xs).shape == (4, 8)
        assert model.value(xs).shape == (4,)


class TestMLP:
    @pytest.fixture
    def blobs(self):
        return synth_dataset("blobs", 24, 3, seed=5, n_classes=3)

    @pytest.mark.parametrize(
        "arch",
        [
            MLPArchitecture(widths=[], head="cross-entropy"),
            MLPArchitecture(widths=[4], activation="sigmoid", head="cross-entropy"),
            MLPArchitecture(widths=[3, 2], activation="identity", head="mse"),
        ],
        ids=["linear", "sigmoid", "deep-linear-mse"],
    )
    def test_grad_matches_fd(self, arch, blobs, rng):
        model = MLPModel(arch, blobs)
        x = model.init_params(rng)
        np.testing.assert_allclose(model.grad(x), fd_grad(model, x), atol=1e-6)

    def test_logistic(self, rng):
        data = synth_dataset("blobs", 20, 2, seed=1, n_classes=2)
        model = MLPModel(MLPArchitecture(head="logistic-l2", l2=0.5), data)
        assert model.dim == 3
        x = rng.standard_normal(3)
        np.testing.assert_allclose(model.grad(x), fd_grad(model, x), atol=1e-6)

    def test_per_example_grads_average(self, blobs, rng):
        model = MLPModel(MLPArchitecture(widths=[2], activation="sigmoid"), blobs)
        x = model.init_params(rng)
        per = model.per_example_grads(x)
        assert per.shape == (blobs.n, model.dim)
        np.testing.assert_allclose(per.mean(axis=0), model.grad(x), atol=1e-12)

    def test_minibatch_indices(self, blobs, rng):
        model = MLPModel(MLPArchitecture(), blobs)
        x = model.init_params(rng)
        idx = np.arange(blobs.n)
        np.testing.assert_allclose(model.grad(x, idx), model.grad(x))

    def test_input_mismatch(self, blobs):
        with pytest.raises(DimensionMismatchError):
            MLPModel(MLPArchitecture(input_dim=5), blobs)

    def test_output_mismatch(self, blobs):
        with pytest.raises(DimensionMismatchError):
            MLPModel(MLPArchitecture(output_dim=2), blobs)

    def test_hessian_symmetric(self, blobs, rng):
        model = MLPModel(MLPArchitecture(), blobs)
        hess = model.hessian(model.init_params(rng))
        np.testing.assert_allclose(hess, hess.T)
