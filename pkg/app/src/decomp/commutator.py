from app.src.core.lab_errors import ValidationError
from app.src.tensorio.stack import WeightStack
import numpy as np


def _matrices(source) -> list[np.ndarray]:
    if isinstance(source, WeightStack):
        return source.matrices()
    return [np.asarray(w, dtype=np.float64) for w in source]


def gram_commutator_norm(source) -> np.ndarray:
    """Pairwise ||G_i G_j - G_j G_i||_F with G_k = W_k^T W_k.

    A common eigenbasis for all Grams exists only if every pair commutes, so a
    nonzero entry is direct evidence that no exact joint diagonalizer exists.
    """
    mats = _matrices(source)
    if len(mats) < 2:
        raise ValidationError("commutator needs at least two matrices")
    grams = [w.T @ w for w in mats]
    k = len(grams)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            value = float(np.linalg.norm(grams[i] @ grams[j] - grams[j] @ grams[i]))
            out[i, j] = out[j, i] = value
    return out


def relative_commutator(source) -> np.ndarray:
    """Commutator norms scaled by ||G_i||_F * ||G_j||_F (zero where a Gram vanishes)."""
    mats = _matrices(source)
    norms = np.array([np.linalg.norm(w.T @ w) for w in mats])
    scale = np.outer(norms, norms)
    raw = gram_commutator_norm(mats)
    return np.divide(raw, scale, out=np.zeros_like(raw), where=scale > 0)
