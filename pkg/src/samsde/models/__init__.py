# SPDX-License-Identifier: Apache-2.0

# Local
from .autoencoder import LinearAutoencoderModel, linear_autoencoder_model
from .base import HessianKind, LossModel
from .datasets import (
    Dataset,
    load_dataset_csv,
    synth_dataset,
    teacher_student_problem,
)
from .mlp import MLPArchitecture, MLPModel, mlp_model
from .oracle import (
    AdditiveGaussian,
    GradOracle,
    Minibatch,
    NoiseDraw,
    oracle_sample,
)
from .quadratic import (
    EmbeddedSaddleModel,
    QuadraticModel,
    diagonal_hessian,
    embedded_saddle_model,
    quadratic_model,
    random_spd_hessian,
)

__all__ = [
    "AdditiveGaussian",
    "Dataset",
    "EmbeddedSaddleModel",
    "GradOracle",
    "HessianKind",
    "LinearAutoencoderModel",
    "LossModel",
    "MLPArchitecture",
    "MLPModel",
    "Minibatch",
    "NoiseDraw",
    "QuadraticModel",
    "diagonal_hessian",
    "embedded_saddle_model",
    "linear_autoencoder_model",
    "load_dataset_csv",
    "mlp_model",
    "oracle_sample",
    "quadratic_model",
    "random_spd_hessian",
    "synth_dataset",
    "teacher_student_problem",
]
