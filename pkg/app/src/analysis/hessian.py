"""Curvature of adapter parameterizations on the quadratic model.

The model loss is L(W) = 1/2 lambda ||W - W*||_F^2 so the Hessian in weight
space is lambda I; each scheme's parameterization reshapes that curvature.
"""

from app.src.adapter.baselines import lora_init, pissa_init, vera_shared_bases
from app.src.adapter.sparse import sample_offdiag_support
from app.src.core.lab_errors import ValidationError, NumericalError
from app.src.linalg import eigh_symmetric, svd_thin
from app.utils.constants import MAX_FD_PARAMS, FD_HESSIAN_STEP
from dataclasses import dataclass
from typing import Callable
import numpy as np


HESSIAN_SCHEMES = ("frod", "lora", "pissa", "vera", "full")
FACTORED_SCHEMES = ("lora", "pissa")


def hessian_fd(loss: Callable[[np.ndarray], float], theta0: np.ndarray, h: float = FD_HESSIAN_STEP) -> np.ndarray:
    """
    Second order central differences of a scalar loss at theta0,
    symmetrized as (H + H^T)/2.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    dim = theta0.size
    if dim > MAX_FD_PARAMS:
        raise ValidationError(f"finite-difference Hessian limited to {MAX_FD_PARAMS} parameters, got {dim}")

    def f(theta: np.ndarray) -> float:
        value = float(loss(theta))
        if not np.isfinite(value):
            raise NumericalError("non-finite loss during finite differencing")
        return value

    f0 = f(theta0)
    E = h * np.eye(dim)
    hess = np.zeros((dim, dim))
    for i in range(dim):
        hess[i, i] = (f(theta0 + E[i]) - 2.0 * f0 + f(theta0 - E[i])) / (h * h)
        for j in range(i + 1, dim):
            pij = f(theta0 + E[i] + E[j])
            pij -= f(theta0 + E[i] - E[j])
            pij -= f(theta0 - E[i] + E[j])
            pij += f(theta0 - E[i] - E[j])
            hess[i, j] = hess[j, i] = pij / (4.0 * h * h)
    return 0.5 * (hess + hess.T)


def adapter_hessian_analytic(scheme: str, A: np.ndarray, B: np.ndarray, lam: float) -> np.ndarray:
    """Block-diagonal model lambda * blkdiag(||A||_F^2 I_mr, ||B||_F^2 I_rn).

    Parameters are ordered theta = [vec B; vec A]; each factor's block is scaled
    by the squared norm of the other factor. Cross blocks are dropped.
    """
    if scheme not in FACTORED_SCHEMES:
        raise ValidationError(f"analytic Hessian available for lora/pissa only, got '{scheme}'")
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    mr, rn = B.size, A.size
    diag = np.concatenate([np.full(mr, float(np.sum(A * A))), np.full(rn, float(np.sum(B * B)))])
    return lam * np.diag(diag)


def full_hessian_analytic(m: int, n: int, lam: float) -> np.ndarray:
    return lam * np.eye(m * n)


def frod_hessian_analytic(k: int, nnz: int, lam: float) -> np.ndarray:
    """lambda I over [sigma; S values]: every parameter moves W along one orthonormal u_i v_j^T."""
    return lam * np.eye(k + nnz)


def gauge_dims(scheme: str, r: int) -> int:
    """Flat directions of the parameterization: B A is unchanged by (B G, G^-1 A), G in GL(r)."""
    return r * r if scheme in FACTORED_SCHEMES else 0


@dataclass
class ConditionReport:
    eigs: np.ndarray
    eps_cond: float
    tau_dot: float

    def to_dict(self) -> dict:
        return {"eigs": self.eigs, "eps_cond": self.eps_cond, "tau_dot": self.tau_dot}


def regularized_condition(eigs, eps_cond: float, flat_dims: int = 0) -> ConditionReport:
    """tau_dot = (max eig + eps) / (min eig + eps).

    `flat_dims` zero eigenvalues are added for directions the Hessian model
    leaves out, such as the gauge orbit of a factorized adapter.
    """
    if flat_dims < 0:
        raise ValidationError(f"flat_dims must be nonnegative, got {flat_dims}")
    if not eps_cond > 0:
        raise ValidationError(f"eps_cond must be positive, got {eps_cond}")
    eigs = np.asarray(eigs, dtype=np.float64).ravel()
    if flat_dims:
        eigs = np.concatenate([eigs, np.zeros(flat_dims)])
    eigs = np.sort(eigs)[::-1]
    if eigs.size == 0:
        raise ValidationError("no eigenvalues given")
    low = float(eigs[-1]) + eps_cond
    if low <= 0:
        raise NumericalError(f"spectrum too negative for regularization: min eig {eigs[-1]:.3e}")
    return ConditionReport(eigs=eigs, eps_cond=eps_cond, tau_dot=(float(eigs[0]) + eps_cond) / low)


def hessian_condition(H: np.ndarray, eps_cond: float, flat_dims: int = 0) -> ConditionReport:
    return regularized_condition(eigh_symmetric(H).values, eps_cond, flat_dims)


@dataclass
class QuadraticModel:
    """A scheme's parameterization of W around the target W* with its start point."""

    scheme: str
    loss: Callable[[np.ndarray], float]
    theta0: np.ndarray
    B: np.ndarray | None = None
    A: np.ndarray | None = None
    block: int | None = None

    @property
    def split(self) -> int:
        """Index where the second parameter block starts."""
        if self.block is not None:
            return self.block
        return self.B.size if self.B is not None else self.theta0.size


def quadratic_model(
    scheme: str,
    W: np.ndarray,
    r: int,
    lam: float,
    seed: int,
    a_norm2: float | None = None,
    s: float = 0.5,
) -> QuadraticModel:
    """Quadratic loss 1/2 lambda ||W_frozen + dW(theta) - W||_F^2 at a scheme's initialization.

    Args:
        scheme: "frod", "lora", "pissa", "vera" or "full".
        W: Base matrix, also the target.
        r: Adapter rank (ignored for frod and full).
        lam: Curvature of the weight-space loss.
        seed: Seed of LoRA's A, VeRA's bases and the FRoD support.
        a_norm2: Rescale LoRA's initial A to this squared Frobenius norm.
        s: Density of the FRoD off-diagonal support.
    """
    if scheme not in HESSIAN_SCHEMES:
        raise ValidationError(f"unknown scheme '{scheme}', expected one of {HESSIAN_SCHEMES}")
    W = np.asarray(W, dtype=np.float64)
    m, n = W.shape

    if scheme == "full":
        return QuadraticModel(
            scheme=scheme,
            loss=lambda theta: 0.5 * lam * float(np.sum((theta.reshape(m, n) - W) ** 2)),
            theta0=W.ravel().copy(),
        )

    if scheme == "frod":
        U, sigma0, V = svd_thin(W)
        k = sigma0.size
        support = sample_offdiag_support(k, s, seed) if k > 1 else None
        rows = support.rows if support is not None else np.zeros(0, dtype=np.int64)
        cols = support.cols if support is not None else np.zeros(0, dtype=np.int64)

        def frod_loss(theta: np.ndarray) -> float:
            core = np.diag(theta[:k])
            core[rows, cols] += theta[k:]
            return 0.5 * lam * float(np.sum((U @ core @ V.T - W) ** 2))

        theta0 = np.concatenate([sigma0, np.zeros(rows.size)])
        return QuadraticModel(scheme=scheme, loss=frod_loss, theta0=theta0, block=k)

    if scheme == "vera":
        bases = vera_shared_bases(m, n, r, seed)

        def vera_loss(theta: np.ndarray) -> float:
            b, d = theta[:m], theta[m:]
            delta = (b[:, None] * bases.B * d) @ bases.A
            return 0.5 * lam * float(np.sum(delta**2))

        theta0 = np.concatenate([np.zeros(m), np.full(r, 0.1)])
        return QuadraticModel(scheme=scheme, loss=vera_loss, theta0=theta0)

    if scheme == "lora":
        layer = lora_init(m, n, r, seed, w0=W)
        B0, A0, frozen = layer.B, layer.A, W
        if a_norm2 is not None:
            if a_norm2 <= 0:
                raise ValidationError(f"a_norm2 must be positive, got {a_norm2}")
            A0 = A0 * np.sqrt(a_norm2 / float(np.sum(A0 * A0)))
    else:
        factors = pissa_init(W, r)
        B0, A0, frozen = factors.B, factors.A, factors.W_residual

    def factor_loss(theta: np.ndarray) -> float:
        B = theta[: m * r].reshape(m, r)
        A = theta[m * r :].reshape(r, n)
        return 0.5 * lam * float(np.sum((frozen + B @ A - W) ** 2))

    return QuadraticModel(
        scheme=scheme,
        loss=factor_loss,
        theta0=np.concatenate([B0.ravel(), A0.ravel()]),
        B=B0,
        A=A0,
    )


def compare_hessian_blocks(H_fd: np.ndarray, H_analytic: np.ndarray, split: int) -> dict:
    """Relative error of the diagonal blocks and size of the dropped cross block."""
    def diag_blocks(H: np.ndarray) -> np.ndarray:
        out = np.zeros_like(H)
        out[:split, :split] = H[:split, :split]
        out[split:, split:] = H[split:, split:]
        return out

    fd_diag, an_diag = diag_blocks(H_fd), diag_blocks(H_analytic)
    scale = float(np.linalg.norm(an_diag))
    cross = float(np.linalg.norm(H_fd[:split, split:]))
    total = float(np.linalg.norm(H_fd))
    return {
        "diag_block_rel_error": float(np.linalg.norm(fd_diag - an_diag)) / scale if scale > 0 else float(np.linalg.norm(fd_diag)),
        "cross_block_norm": cross,
        "cross_block_rel": cross / total if total > 0 else 0.0,
    }
