from app.src.core.lab_errors import ValidationError
from app.src.tensorio.rng import SplitMix64
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass, field
import numpy as np
import logging
import math


logger = logging.getLogger(__name__)


def offdiag_nnz(n: int, s: float, warn: bool = False) -> int:
    """round(s * n^2) (half up), capped at the n^2 - n off-diagonal cells."""
    requested = int(math.floor(s * n * n + 0.5))
    cap = n * n - n
    if requested > cap:
        if warn:
            logger.warning(UI_MESSAGES["warnings"]["density_cap"].format(s, n, cap))
        return cap
    return requested


@dataclass
class SparseOffDiag:
    """Strictly off-diagonal sparse n x n matrix in coordinate form.

    `rows`/`cols` are sorted row-major; `values` is the trainable payload and
    is updated in place by the optimizer.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    density: float = 0.0
    seed: int = 0
    strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.strict:
            self.validate()

    def validate(self):
        if not (len(self.rows) == len(self.cols) == len(self.values)):
            raise ValidationError("support and values lengths differ")
        if len(self.rows) and (self.rows.min() < 0 or self.cols.min() < 0 or max(self.rows.max(), self.cols.max()) >= self.n):
            raise ValidationError("support position outside the matrix")
        if np.any(self.rows == self.cols):
            raise ValidationError("sparse perturbation has diagonal support")
        cells = self.rows * self.n + self.cols
        if np.unique(cells).size != cells.size:
            raise ValidationError("sparse perturbation has duplicate positions")

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    @property
    def support(self) -> list[tuple[int, int]]:
        return [(int(p), int(q)) for p, q in zip(self.rows, self.cols)]

    def diagonal_positions(self) -> list[int]:
        return sorted({int(p) for p, q in zip(self.rows, self.cols) if p == q})

    def with_values(self, values: np.ndarray) -> "SparseOffDiag":
        return SparseOffDiag(
            n=self.n,
            rows=self.rows.copy(),
            cols=self.cols.copy(),
            values=np.array(values, dtype=np.float64),
            density=self.density,
            seed=self.seed,
            strict=self.strict,
        )

    def with_unchecked_entry(self, row: int, col: int, value: float) -> "SparseOffDiag":
        """Copy with one extra entry and no structural validation (fault injection)."""
        return SparseOffDiag(
            n=self.n,
            rows=np.append(self.rows, row),
            cols=np.append(self.cols, col),
            values=np.append(self.values, value),
            density=self.density,
            seed=self.seed,
            strict=False,
        )

    def matvec(self, X: np.ndarray) -> np.ndarray:
        """S x for x of shape (n,) or a batch (b, n)."""
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros_like(X)
        if self.nnz:
            np.add.at(out.T, self.rows, (X[..., self.cols] * self.values).T)
        return out

    def rmatvec(self, X: np.ndarray) -> np.ndarray:
        """S^T x for x of shape (n,) or a batch (b, n)."""
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros_like(X)
        if self.nnz:
            np.add.at(out.T, self.cols, (X[..., self.rows] * self.values).T)
        return out

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        np.add.at(out, (self.rows, self.cols), self.values)
        return out


def _cell_to_position(index: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # off-diagonal cells enumerated row-major, skipping (row, row)
    rows = index // (n - 1)
    k = index % (n - 1)
    cols = np.where(k < rows, k, k + 1)
    return rows, cols


def sample_offdiag_support(n: int, s: float, seed: int) -> SparseOffDiag:
    """Uniform off-diagonal support of nnz = min(round(s n^2), n^2 - n) cells.

    A SplitMix64 partial Fisher-Yates shuffle over the n^2 - n off-diagonal cell
    indices picks the cells; values start at exactly zero.
    """
    if n < 2:
        raise ValidationError(f"sparse support needs n >= 2, got {n}")
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"density s must lie in [0, 1], got {s}")
    nnz = offdiag_nnz(n, s, warn=True)
    total = n * n - n
    rng = SplitMix64(seed)
    cells = np.arange(total, dtype=np.int64)
    for k in range(nnz):
        j = k + rng.randbelow(total - k)
        cells[k], cells[j] = cells[j], cells[k]
    chosen = np.sort(cells[:nnz])
    rows, cols = _cell_to_position(chosen, n)
    return SparseOffDiag(n=n, rows=rows, cols=cols, values=np.zeros(nnz), density=s, seed=seed)


def empty_offdiag(n: int, seed: int = 0) -> SparseOffDiag:
    return SparseOffDiag(
        n=n,
        rows=np.zeros(0, dtype=np.int64),
        cols=np.zeros(0, dtype=np.int64),
        values=np.zeros(0),
        density=0.0,
        seed=seed,
    )
