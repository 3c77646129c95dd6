"""Deterministic dense kernels with fixed sign conventions.

QR is Householder, the symmetric eigensolver is cyclic Jacobi with a
round-robin pair schedule, and the SVD goes through the smaller Gram matrix.
Everything runs in float64 regardless of the caller's dtype.
"""

from app.src.core.lab_errors import ValidationError, NumericalError
from app.utils.constants import (
    JACOBI_MAX_SWEEPS,
    JACOBI_OFF_RTOL,
    SYMMETRY_RTOL,
    SIGN_TIE_RTOL,
)
from dataclasses import dataclass
from functools import lru_cache
import numpy as np
import logging


logger = logging.getLogger(__name__)

# singular values below this fraction of the largest are treated as exact zeros
SVD_NULL_RTOL = 1e-12


@dataclass(frozen=True)
class EigResult:
    values: np.ndarray
    vectors: np.ndarray


def _as_matrix(A, name: str = "A") -> np.ndarray:
    A = np.array(A, dtype=np.float64, copy=True)
    if A.ndim != 2:
        raise ValidationError(f"{name} must be a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"{name} has non-finite entries")
    return A


def _max_abs(A: np.ndarray) -> float:
    return float(np.max(np.abs(A))) if A.size else 0.0


def _check_symmetric(A: np.ndarray, name: str = "A"):
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got {A.shape}")
    asym = _max_abs(A - A.T)
    if asym > SYMMETRY_RTOL * _max_abs(A):
        raise ValidationError(f"{name} is not symmetric (max |A - A^T| = {asym:.3e})")


def column_sign_flips(vectors: np.ndarray) -> np.ndarray:
    """Per-column factor (+1 or -1) that makes the largest-magnitude entry positive.

    Entries within a relative SIGN_TIE_RTOL of the maximum count as tied and
    the lowest index wins.
    """
    flips = np.ones(vectors.shape[1])
    for k in range(vectors.shape[1]):
        col = np.abs(vectors[:, k])
        peak = col.max() if col.size else 0.0
        if peak == 0.0:
            continue
        idx = int(np.argmax(col >= peak * (1.0 - SIGN_TIE_RTOL)))
        if vectors[idx, k] < 0:
            flips[k] = -1.0
    return flips


def fix_column_signs(vectors: np.ndarray) -> np.ndarray:
    return vectors * column_sign_flips(vectors)


def qr_thin(A) -> tuple[np.ndarray, np.ndarray]:
    """Thin Householder QR of a tall matrix.

    Args:
        A: rows x cols with rows >= cols.

    Returns:
        (Q, R): Q is rows x cols with orthonormal columns, R is cols x cols upper
        triangular with a nonnegative diagonal.
    """
    R = _as_matrix(A)
    m, n = R.shape
    if m < n:
        raise ValidationError(f"qr_thin needs rows >= cols, got {m}x{n}")

    reflectors: list[np.ndarray | None] = []
    for k in range(n):
        x = R[k:, k]
        norm_x = float(np.linalg.norm(x))
        if norm_x == 0.0:
            reflectors.append(None)
            continue
        alpha = -norm_x if x[0] >= 0 else norm_x
        v = x.copy()
        v[0] -= alpha
        norm_v = float(np.linalg.norm(v))
        if norm_v == 0.0:
            reflectors.append(None)
            continue
        v /= norm_v
        R[k:, k:] -= 2.0 * np.outer(v, v @ R[k:, k:])
        R[k + 1 :, k] = 0.0
        reflectors.append(v)

    Q = np.eye(m, n)
    for k in range(n - 1, -1, -1):
        v = reflectors[k]
        if v is None:
            continue
        Q[k:, :] -= 2.0 * np.outer(v, v @ Q[k:, :])

    R = np.triu(R[:n, :n])
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Tournament schedule: n-1 rounds (n even) of n/2 disjoint (p, q) pairs, p < q."""
    players = list(range(n + (n % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a >= n or b >= n:
                continue
            ps.append(min(a, b))
            qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1], *players[1:-1]]
    return tuple(rounds)


def _off_norm(A: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0)))


def eigh_symmetric(A) -> EigResult:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Values are sorted descending (stable) and every eigenvector column is
    sign-fixed by `fix_column_signs`.
    """
    A = _as_matrix(A)
    _check_symmetric(A)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    if n > 1:
        threshold = JACOBI_OFF_RTOL * float(np.linalg.norm(A))
        schedule = _round_robin(n)
        previous = np.inf
        for sweep in range(JACOBI_MAX_SWEEPS + 1):
            off = _off_norm(A)
            if off <= threshold:
                break
            # rounding floor: a sweep that no longer reduces a tiny off-norm is done
            if off >= previous and off <= 1e3 * threshold:
                logger.debug("Jacobi stalled at off-norm %.3e after %d sweeps", off, sweep)
                break
            if sweep == JACOBI_MAX_SWEEPS:
                raise NumericalError(
                    f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-norm {off:.3e})"
                )
            previous = off
            for P, Q in schedule:
                apq = A[P, Q]
                active = apq != 0.0
                if not np.any(active):
                    continue
                app, aqq = A[P, P], A[Q, Q]
                safe = np.where(active, apq, 1.0)
                theta = (aqq - app) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                t = np.where(
                    big,
                    0.5 / np.where(big, theta, 1.0),
                    np.where(theta >= 0, 1.0, -1.0)
                    / (np.abs(theta) + np.sqrt(np.where(big, 0.0, theta) ** 2 + 1.0)),
                )
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                rows_p, rows_q = A[P, :].copy(), A[Q, :].copy()
                A[P, :] = c[:, None] * rows_p - s[:, None] * rows_q
                A[Q, :] = s[:, None] * rows_p + c[:, None] * rows_q
                cols_p, cols_q = A[:, P].copy(), A[:, Q].copy()
                A[:, P] = cols_p * c - cols_q * s
                A[:, Q] = cols_p * s + cols_q * c
                A[P, Q] = 0.0
                A[Q, P] = 0.0

                vp, vq = V[:, P].copy(), V[:, Q].copy()
                V[:, P] = vp * c - vq * s
                V[:, Q] = vp * s + vq * c

    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    return EigResult(values=values[order], vectors=fix_column_signs(V[:, order]))


def _complete_columns(U: np.ndarray, null: np.ndarray) -> np.ndarray:
    """Replace the columns flagged in `null` by an orthonormal completion over e_0, e_1, ..."""
    U = U.copy()
    m = U.shape[0]
    basis = [U[:, k] for k in range(U.shape[1]) if not null[k]]
    candidate = 0
    for k in np.flatnonzero(null):
        while candidate < m:
            e = np.zeros(m)
            e[candidate] = 1.0
            candidate += 1
            for _ in range(2):
                for b in basis:
                    e -= (b @ e) * b
            norm = float(np.linalg.norm(e))
            if norm > 1e-3:
                U[:, k] = e / norm
                basis.append(U[:, k])
                break
    return U


def svd_thin(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD A = U diag(S) V^T through the smaller Gram matrix.

    Returns U (m x k), S (k, descending, nonnegative), V (n x k) with
    k = min(m, n). V columns follow the eigenvector sign convention and U is
    flipped along with them.
    """
    A = _as_matrix(A)
    m, n = A.shape
    if m < n:
        U_t, S, V_t = svd_thin(A.T)
        U, V = V_t, U_t
        signs = column_sign_flips(V)
        return U * signs, S, V * signs

    eig = eigh_symmetric(A.T @ A)
    V = eig.vectors
    B = A @ V
    S = np.linalg.norm(B, axis=0)
    order = np.argsort(-S, kind="stable")
    S, V, B = S[order], V[:, order], B[:, order]

    peak = S[0] if S.size else 0.0
    null = S <= SVD_NULL_RTOL * peak if peak > 0 else np.ones_like(S, dtype=bool)
    S = np.where(null, 0.0, S)
    U = np.divide(B, np.where(null, 1.0, S))
    if np.any(null):
        U = _complete_columns(U, null)

    signs = column_sign_flips(V)
    return U * signs, S, V * signs


def svd_values(A) -> np.ndarray:
    """Singular values, descending, min(m, n) of them."""
    return svd_thin(A)[1]


def spectral_norm(A) -> float:
    values = svd_values(A)
    return float(values[0]) if values.size else 0.0


def _back_substitute(R: np.ndarray, Y: np.ndarray) -> np.ndarray:
    n = R.shape[0]
    X = np.zeros_like(Y)
    for i in range(n - 1, -1, -1):
        if R[i, i] == 0.0:
            raise NumericalError("singular triangular factor in ridge solve")
        X[i] = (Y[i] - R[i, i + 1 :] @ X[i + 1 :]) / R[i, i]
    return X


def solve_spd(M, rhs) -> np.ndarray:
    """Solve M X = rhs for square nonsingular M through Householder QR."""
    Q, R = qr_thin(M)
    return _back_substitute(R, Q.T @ np.asarray(rhs, dtype=np.float64))


def ridge_inverse(G, pi: float) -> np.ndarray:
    """(G + pi I)^{-1} for a symmetric PSD G, returned exactly symmetric."""
    if not pi > 0:
        raise ValidationError(f"ridge constant pi must be positive, got {pi}")
    G = _as_matrix(G, "G")
    _check_symmetric(G, "G")
    n = G.shape[0]
    X = solve_spd(G + pi * np.eye(n), np.eye(n))
    return 0.5 * (X + X.T)
