"""One-class detector: principal-subspace reconstruction over bona fide cubes.

Training fits a mean and the top-k principal directions of the flattened
cubes (singular value decomposition of the centered data). A sample is
scored by how badly the subspace reconstructs it, normalised by the median
training reconstruction error so scores are comparable across runs:

    score = -(mean squared reconstruction error / score_scale)

Scores are never positive and reach 0 exactly on the affine span, matching
the canonical "higher means more bona fide" orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .container import pack_record, read_record_at
from .errors import ShapeMismatch, TooFewSamples
from .fileio import atomic_write_bytes
from .synth import SampleCube

MODEL_RECORD_ID = "subspace-model"
_SCALE_FLOOR = 1e-12


@dataclass
class SubspaceModel:
    mean: np.ndarray           # (d,)
    basis: np.ndarray          # (k, d), orthonormal rows
    cube_shape: tuple[int, int, int]
    trained_on: int
    score_scale: float

    @property
    def k(self) -> int:
        return self.basis.shape[0]


def _stack(cubes: Sequence[SampleCube]) -> tuple[np.ndarray, tuple[int, int, int]]:
    shape = tuple(cubes[0].values.shape)
    rows = []
    for cube in cubes:
        if tuple(cube.values.shape) != shape:
            raise ShapeMismatch(shape, tuple(cube.values.shape))
        rows.append(np.asarray(cube.values, dtype=np.float64).reshape(-1))
    return np.vstack(rows), shape


def train(cubes: Sequence[SampleCube], k: int) -> SubspaceModel:
    """Fit the top-k principal directions of the training cubes."""
    if k < 1:
        raise TooFewSamples("latent dimension must be at least 1")
    if len(cubes) < k + 1:
        raise TooFewSamples(f"need at least {k + 1} cubes for k={k}, got {len(cubes)}")
    X, shape = _stack(cubes)
    n, d = X.shape
    if k > min(n - 1, d):
        raise TooFewSamples(f"k={k} exceeds min(n-1, d)={min(n - 1, d)}")
    mean = X.mean(axis=0)
    centered = X - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    basis = vt[:k]

    residual = centered - (centered @ basis.T) @ basis
    train_errors = np.mean(residual**2, axis=1)
    score_scale = max(float(np.median(train_errors)), _SCALE_FLOOR)
    return SubspaceModel(mean, basis, shape, n, score_scale)


def reconstruction_error(model: SubspaceModel, cube: SampleCube) -> float:
    """Mean squared residual after projecting onto the subspace."""
    if tuple(cube.values.shape) != model.cube_shape:
        raise ShapeMismatch(model.cube_shape, tuple(cube.values.shape))
    x = np.asarray(cube.values, dtype=np.float64).reshape(-1) - model.mean
    residual = x - model.basis.T @ (model.basis @ x)
    return float(np.mean(residual**2))


def score(model: SubspaceModel, cube: SampleCube) -> float:
    return -reconstruction_error(model, cube) / model.score_scale


def score_many(model: SubspaceModel, cubes: Mapping[str, SampleCube]) -> dict[str, float]:
    return {sid: score(model, cubes[sid]) for sid in sorted(cubes)}


def save_model(model: SubspaceModel, path: str | Path) -> None:
    """Persist in the cube container framing: one record holding the mean
    followed by the basis rows, with model metadata in the header."""
    bands, h, w = model.cube_shape
    payload = np.vstack([model.mean, model.basis]).reshape(1 + model.k, h, w * bands)
    blob = pack_record(
        MODEL_RECORD_ID,
        payload,
        extra={
            "cube_bands": bands,
            "cube_h": h,
            "cube_w": w,
            "k": model.k,
            "trained_on": model.trained_on,
            "score_scale": model.score_scale,
        },
    )
    atomic_write_bytes(path, blob)


def load_model(path: str | Path) -> SubspaceModel:
    header, values = read_record_at(path, 0)
    if header.get("id") != MODEL_RECORD_ID:
        raise ValueError(f"not a subspace model file: {path}")
    shape = (header["cube_bands"], header["cube_h"], header["cube_w"])
    k = header["k"]
    flat = values.reshape(1 + k, -1)
    mean = flat[0]
    basis = flat[1:]
    # float32 storage degrades orthonormality below the model invariant;
    # re-orthonormalise within the (slightly perturbed) row space
    q, _ = np.linalg.qr(basis.T)
    basis = q.T
    return SubspaceModel(mean, basis, shape, header["trained_on"], header["score_scale"])
