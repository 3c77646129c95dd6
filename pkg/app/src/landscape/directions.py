from app.src.core.lab_errors import ValidationError, ShapeMismatchError
from app.src.linalg import eigh_symmetric, column_sign_flips
from app.src.tensorio.rng import SplitMix64
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass
import numpy as np
import logging
import math


logger = logging.getLogger(__name__)

PROVENANCES = ("pca-1", "pca-2", "pca-2-completion", "filter-random")
ZERO_VARIANCE_RTOL = 1e-12


@dataclass
class Direction:
    """A probe direction in flattened trainable-parameter space."""

    vector: np.ndarray
    provenance: str
    explained_variance: float | None = None
    seed: int | None = None

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def describe(self) -> dict:
        return {
            "provenance": self.provenance,
            "norm": self.norm,
            "explained_variance": self.explained_variance,
            "seed": self.seed,
            "normalization": "filter" if self.provenance == "filter-random" else "unit",
        }


def _completion(d1: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to d1: the least-aligned basis vector, projected."""
    e = np.zeros_like(d1)
    e[int(np.argmin(np.abs(d1)))] = 1.0
    v = e - (d1 @ e) * d1
    return v / np.linalg.norm(v)


def principal_directions(checkpoints: list[np.ndarray]) -> tuple[Direction, Direction]:
    """Top two principal axes of a parameter trajectory.

    The covariance eigenproblem is solved on the k x k Gram matrix of the
    centered checkpoints, then lifted back to parameter space. A rank-one
    trajectory gets a deterministic orthogonal completion as its second axis.
    """
    if len(checkpoints) < 3:
        raise ValidationError(f"principal directions need >= 3 checkpoints, got {len(checkpoints)}")
    X = np.vstack([np.asarray(c, dtype=np.float64).ravel() for c in checkpoints])
    if X.shape[1] < 2:
        raise ValidationError("principal directions need at least 2 parameters")
    if not np.all(np.isfinite(X)):
        raise ValidationError("non-finite checkpoint")
    Xc = X - X.mean(axis=0)
    G = Xc @ Xc.T
    G = 0.5 * (G + G.T)
    eig = eigh_symmetric(G)
    lam = np.clip(eig.values, 0.0, None)
    total = float(lam.sum())
    scale = float(np.max(np.abs(X))) or 1.0
    if total <= ZERO_VARIANCE_RTOL * scale * scale:
        raise ValidationError("zero-variance trajectory: every checkpoint is identical")

    lifted = Xc.T @ eig.vectors[:, :2]
    d1 = lifted[:, 0] / np.linalg.norm(lifted[:, 0])
    first = Direction(vector=d1, provenance="pca-1", explained_variance=float(lam[0] / total))

    if lam[1] <= ZERO_VARIANCE_RTOL * lam[0]:
        d2 = _completion(d1)
        second = Direction(vector=d2, provenance="pca-2-completion", explained_variance=0.0)
    else:
        d2 = lifted[:, 1] - (d1 @ lifted[:, 1]) * d1
        d2 /= np.linalg.norm(d2)
        second = Direction(vector=d2, provenance="pca-2", explained_variance=float(lam[1] / total))

    for d in (first, second):
        if column_sign_flips(d.vector[:, None])[0] < 0:
            d.vector = -d.vector
    return first, second


def filter_normalized_random(
    theta: np.ndarray, seed: int, shapes: list[tuple[int, ...]]
) -> Direction:
    """Gaussian direction rescaled block by block to the norm of the matching parameter block."""
    theta = np.asarray(theta, dtype=np.float64).ravel()
    sizes = [int(math.prod(s)) for s in shapes]
    if sum(sizes) != theta.size:
        raise ShapeMismatchError(f"block shapes cover {sum(sizes)} entries, theta has {theta.size}")
    d = SplitMix64(seed).normals(theta.size)
    offset = 0
    for k, size in enumerate(sizes):
        block = slice(offset, offset + size)
        target = float(np.linalg.norm(theta[block]))
        current = float(np.linalg.norm(d[block]))
        if target == 0.0 or current == 0.0:
            logger.warning(UI_MESSAGES["warnings"]["zero_block"].format(k))
            d[block] = 0.0
        else:
            d[block] *= target / current
        offset += size
    return Direction(vector=d, provenance="filter-random", seed=seed)
