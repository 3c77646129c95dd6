from app.src.core.lab_errors import ValidationError
from app.src.tensorio.rng import SplitMix64
from app.src.train.config import TaskSpec
from app.utils.constants import TASK_KINDS, TRAIN_FRACTION
from dataclasses import dataclass
import numpy as np


@dataclass
class Dataset:
    """Seeded classification task split 80/20 into train and eval.

    Inputs are (samples, d) for blobs and (samples, seq_len, d) for tiny-attention.
    The loss is softmax cross-entropy over `classes` logits.
    """

    kind: str
    classes: int
    X_train: np.ndarray
    y_train: np.ndarray
    X_eval: np.ndarray
    y_eval: np.ndarray
    loss_name: str = "softmax-cross-entropy"


def _class_patterns(rng: SplitMix64, classes: int, dim: int, radius: float) -> np.ndarray:
    P = rng.normals(classes * dim).reshape(classes, dim)
    if classes <= dim:
        # orthogonal patterns put every pair of means at the same distance
        for i in range(classes):
            for j in range(i):
                P[i] -= (P[j] @ P[i]) * P[j]
            P[i] /= np.linalg.norm(P[i])
    else:
        P /= np.linalg.norm(P, axis=1, keepdims=True)
    return radius * P


def _split(rng: SplitMix64, X: np.ndarray, y: np.ndarray, kind: str, classes: int) -> Dataset:
    order = rng.permutation(len(y))
    cut = int(TRAIN_FRACTION * len(y))
    train, held = order[:cut], order[cut:]
    return Dataset(kind=kind, classes=classes, X_train=X[train], y_train=y[train], X_eval=X[held], y_eval=y[held])


def make_task(spec: TaskSpec, seed: int) -> Dataset:
    """Build the blobs or tiny-attention task deterministically from `seed`.

    blobs: class means at distance `radius` from the origin, unit-variance noise.
    tiny-attention: Gaussian token sequences with the class pattern planted on one
    random token, so the label is only readable by attending to that token.
    """
    if spec.kind not in TASK_KINDS:
        raise ValidationError(f"unknown task kind '{spec.kind}'")
    if spec.classes < 2:
        raise ValidationError(f"classes must be >= 2, got {spec.classes}")
    if spec.samples < spec.classes:
        raise ValidationError(f"samples ({spec.samples}) must be >= classes ({spec.classes})")
    if spec.input_dim < 1:
        raise ValidationError(f"input_dim must be >= 1, got {spec.input_dim}")

    rng = SplitMix64(seed)
    patterns = _class_patterns(rng, spec.classes, spec.input_dim, spec.radius)
    y = np.arange(spec.samples) % spec.classes

    if spec.kind == "blobs":
        X = patterns[y] + rng.normals(spec.samples * spec.input_dim).reshape(spec.samples, spec.input_dim)
        return _split(rng, X, y, spec.kind, spec.classes)

    T = spec.seq_len
    X = rng.normals(spec.samples * T * spec.input_dim).reshape(spec.samples, T, spec.input_dim)
    positions = np.array([rng.randbelow(T) for _ in range(spec.samples)])
    X[np.arange(spec.samples), positions] += patterns[y]
    return _split(rng, X, y, spec.kind, spec.classes)
