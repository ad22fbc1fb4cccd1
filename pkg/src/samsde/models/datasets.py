# SPDX-License-Identifier: Apache-2.0
"""Tabular datasets: CSV loader and seeded synthetic generators"""

# Standard
import csv
import dataclasses
import logging
import os
import typing

# Third Party
import numpy as np

# Local
from ..core.errors import DatasetError
from ..core.rng import RngStream

logger = logging.getLogger(__name__)

SynthKind = typing.Literal["blobs", "teacher-student"]
LabelKind = typing.Literal["class", "real"]


@dataclasses.dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self) -> None:
        if self.features.ndim != 2:
            raise DatasetError(f"features must be 2-d, got shape {self.features.shape}")
        n = self.features.shape[0]
        if n < 1:
            raise DatasetError("dataset has no rows")
        if self.labels.shape[0] != n:
            raise DatasetError(
                f"{n} feature rows but {self.labels.shape[0]} labels"
            )
        if not (np.all(np.isfinite(self.features)) and np.all(np.isfinite(self.labels))):
            raise DatasetError("dataset has missing or non-finite values")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def p(self) -> int:
        return int(self.features.shape[1])

    @property
    def is_classification(self) -> bool:
        return np.issubdtype(self.labels.dtype, np.integer)

    @property
    def n_classes(self) -> int:
        if not self.is_classification:
            raise DatasetError(f"{self.name} has real-valued targets")
        return int(self.labels.max()) + 1


def standardize(features: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per column; constant columns are only centered"""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (features - mean) / std


def load_dataset_csv(
    path: str | os.PathLike[str], labels: LabelKind = "class"
) -> Dataset:
    """Read a CSV with a header row; the last column is the label

    Class labels must be non-negative integers; real labels are kept as floats.
    """
    rows: list[list[float]] = []
    lines: list[int] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path} is empty")
        if len(header) < 2:
            raise DatasetError("need at least one feature and one label column", line=1)
        for row in reader:
            lineno = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"malformed row: expected {len(header)} columns, got {len(row)}",
                    line=lineno,
                )
            try:
                rows.append([float(cell) for cell in row])
                lines.append(lineno)
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise DatasetError(f"non-numeric value {bad!r}", line=lineno)
    if not rows:
        raise DatasetError(f"{path} has no data rows")
    data = np.asarray(rows, dtype=float)
    targets = data[:, -1]
    if labels == "class":
        bad_rows = np.flatnonzero((targets != np.round(targets)) | (targets < 0))
        if bad_rows.size:
            i = int(bad_rows[0])
            raise DatasetError(
                f"class label {float(targets[i])} is not a non-negative integer",
                line=lines[i],
            )
        targets = targets.astype(np.int64)
    logger.debug("loaded %d rows with %d features from %s", data.shape[0], data.shape[1] - 1, path)
    return Dataset(
        standardize(data[:, :-1]), targets, name=os.path.basename(os.fspath(path))
    )


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def synth_dataset(
    kind: SynthKind,
    n: int,
    p: int,
    seed: int,
    *,
    n_classes: int = 2,
    separation: float = 10.0,
    depth: int = 20,
    width: int = 10,
) -> Dataset:
    """Seed-deterministic synthetic dataset

    ``blobs``: Gaussian classes with unit variance whose centers sit
    ``separation`` standard deviations apart. ``teacher-student``: standard
    Gaussian inputs labelled by a deep linear teacher MLP.
    """
    if kind == "teacher-student":
        dataset, _ = teacher_student_problem(n=n, p=p, seed=seed, depth=depth, width=width)
        return dataset
    if kind != "blobs":
        raise DatasetError(f"unknown synthetic dataset kind {kind!r}")
    if n < 1 or p < 1:
        raise DatasetError(f"n and p must be positive, got n={n}, p={p}")
    rng = RngStream(seed).generator()
    direction = rng.standard_normal(p)
    direction /= np.linalg.norm(direction)
    labels = np.arange(n, dtype=np.int64) % n_classes
    offsets = (np.arange(n_classes) - (n_classes - 1) / 2.0) * separation
    features = offsets[labels][:, None] * direction + rng.standard_normal((n, p))
    return Dataset(standardize(features), labels, name=f"blobs-{n_classes}")


def teacher_student_problem(
    *, n: int, p: int = 5, seed: int = 0, depth: int = 20, width: int = 10
) -> tuple[Dataset, np.ndarray]:
    """Dataset labelled by a random deep linear teacher and the teacher's parameters"""
    # Local
    from .mlp import MLPArchitecture, MLPModel

    rng = RngStream(seed).generator()
    features = standardize(rng.standard_normal((n, p)))
    arch = MLPArchitecture(
        widths=[width] * depth, activation="identity", head="mse", input_dim=p, output_dim=1
    )
    placeholder = Dataset(features, np.zeros(n), name="teacher-student")
    teacher = MLPModel(arch, placeholder)
    params = teacher.init_params(rng)
    labels = teacher.predict(params)[:, 0]
    return Dataset(features, labels, name="teacher-student"), params
