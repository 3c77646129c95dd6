"""Dimension of the reachable update subspace (parameter degrees of freedom).

The update map theta -> dW is linearized at a generic point and the numerical
rank of its Jacobian is taken as the local dimension of the update manifold.
"""

from app.src.core.lab_errors import ValidationError
from app.src.linalg import svd_values
from app.src.tensorio.rng import SplitMix64
from app.utils.constants import PDOF_RANK_RTOL, MAX_PDOF_DIM
from app.utils.ui_messages import UI_MESSAGES
from collections import Counter
from dataclasses import dataclass, field
import numpy as np
import logging


logger = logging.getLogger(__name__)

PDOF_SCHEMES = ("lora", "vera")


def lora_dimension(m: int, n: int, r: int) -> int:
    return r * (m + n - r)


def vera_hypothesis(m: int, n: int, r: int) -> int:
    return r + n


def lora_jacobian(B: np.ndarray, A: np.ndarray) -> np.ndarray:
    """d vec(BA) / d [vec B; vec A], row-major vectorization."""
    m, r = B.shape
    n = A.shape[1]
    return np.hstack([np.kron(np.eye(m), A.T), np.kron(B, np.eye(n))])


def vera_jacobian(B: np.ndarray, A: np.ndarray, b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """d vec(diag(b) B diag(d) A) / d [b; d] with B, A frozen."""
    m, r = B.shape
    n = A.shape[1]
    core = (B * d) @ A
    J_b = np.zeros((m * n, m))
    for i in range(m):
        J_b[i * n : (i + 1) * n, i] = core[i]
    J_d = (b[:, None, None] * B[:, :, None] * A[None, :, :]).transpose(0, 2, 1).reshape(m * n, r)
    return np.hstack([J_b, J_d])


def numerical_rank(J: np.ndarray, rtol: float = PDOF_RANK_RTOL) -> int:
    values = svd_values(J)
    if values.size == 0 or values[0] == 0.0:
        return 0
    return int(np.sum(values > rtol * values[0]))


def _check_dims(scheme: str, m: int, n: int, r: int):
    if scheme not in PDOF_SCHEMES:
        raise ValidationError(f"pdof supports {PDOF_SCHEMES}, got '{scheme}'")
    if max(m, n) > MAX_PDOF_DIM:
        raise ValidationError(f"dims too large for a dense Jacobian: m={m} n={n} (max {MAX_PDOF_DIM})")
    if min(m, n) < 1 or not 1 <= r <= min(m, n):
        raise ValidationError(f"need m, n >= 1 and 1 <= r <= min(m, n), got m={m} n={n} r={r}")


def pdof_rank(scheme: str, m: int, n: int, r: int, seed: int) -> int:
    """Measured Jacobian rank at a generic N(0, 1) point drawn from `seed`."""
    _check_dims(scheme, m, n, r)
    rng = SplitMix64(seed)
    if scheme == "lora":
        B = rng.normals(m * r).reshape(m, r)
        A = rng.normals(r * n).reshape(r, n)
        return numerical_rank(lora_jacobian(B, A))
    B = rng.normals(m * r).reshape(m, r)
    A = rng.normals(r * n).reshape(r, n)
    b = rng.normals(m)
    d = rng.normals(r)
    return numerical_rank(vera_jacobian(B, A, b, d))


@dataclass
class PdofResult:
    scheme: str
    m: int
    n: int
    r: int
    ranks: list[int]
    measured: int
    closed_form: int
    matches: bool
    seeds: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "m": self.m,
            "n": self.n,
            "r": self.r,
            "seeds": self.seeds,
            "ranks": self.ranks,
            "measured": self.measured,
            "closed_form": self.closed_form,
            "matches": self.matches,
        }


def pdof_vote(scheme: str, m: int, n: int, r: int, seeds: list[int]) -> PdofResult:
    """Majority rank over seeds (ties go to the smaller rank), against the closed form.

    For VeRA the closed form r + n is a hypothesis; a mismatch is logged, not raised.
    """
    if not seeds:
        raise ValidationError("pdof needs at least one seed")
    ranks = [pdof_rank(scheme, m, n, r, seed) for seed in seeds]
    counts = Counter(ranks)
    top = max(counts.values())
    measured = min(rank for rank, count in counts.items() if count == top)
    closed = lora_dimension(m, n, r) if scheme == "lora" else vera_hypothesis(m, n, r)
    if scheme == "vera" and measured != closed:
        logger.warning(UI_MESSAGES["warnings"]["vera_hypothesis"].format(measured, closed, m, n, r))
    return PdofResult(
        scheme=scheme,
        m=m,
        n=n,
        r=r,
        ranks=ranks,
        measured=measured,
        closed_form=closed,
        matches=measured == closed,
        seeds=list(seeds),
    )
