"""Hierarchical joint decomposition of a weight stack.

Per category c the L layers are stacked into W^(c) (L*m x n) and factored
W^(c) = Q^(c) R^(c). A regularized aggregate T_pi of Gram inverses is
diagonalized as Z diag(eigvals) Z^T, and every layer block Q_i of Q^(c) is
rotated into the shared basis: B_i = Q_i Z, sigma_i = column norms of B_i,
U_i = B_i / sigma_i. With V^(c)^T = Z^T R^(c) each layer is recovered exactly
as U_i diag(sigma_i) V^(c)^T.
"""

from app.src.core.lab_errors import ValidationError, NumericalError, ShapeMismatchError
from app.src.helpers.threads import ordered_map
from app.src.linalg import qr_thin, eigh_symmetric, ridge_inverse
from app.src.tensorio.stack import WeightStack, CategoryStack
from app.utils.constants import DEFAULT_PI, DEFAULT_MODE, DECOMP_MODES, SIGMA_FLOOR
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass, field
import numpy as np
import logging


logger = logging.getLogger(__name__)

# T_pi counts as degenerate (a multiple of I) below this relative spread
DEGENERATE_RTOL = 1e-12


@dataclass
class FlooredColumn:
    label: str
    layer: int
    columns: list[int]


@dataclass
class JointDecomposition:
    Z: np.ndarray
    eigvals: np.ndarray
    R: dict[str, np.ndarray]
    U: dict[str, list[np.ndarray]]
    sigma: dict[str, list[np.ndarray]]
    pi: float
    mode: str
    labels: list[str]
    degenerate: bool = False
    floored: list[FlooredColumn] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.U[self.labels[0]][0].shape

    def layers(self, label: str) -> int:
        return len(self.U[label])

    def Vt(self, label: str) -> np.ndarray:
        """V^(c)^T = Z^T R^(c), shared by all layers of the category."""
        return self.Z.T @ self.R[label]

    def resolve(self, c: str | int) -> str:
        if isinstance(c, str):
            if c not in self.R:
                raise ValidationError(f"unknown category '{c}'")
            return c
        if not 0 <= c < len(self.labels):
            raise ValidationError(f"category index {c} out of range [0, {len(self.labels)})")
        return self.labels[c]


def stack_category(cat: CategoryStack) -> np.ndarray:
    """Concatenate a category's layers vertically, layer i in rows [i*m, (i+1)*m)."""
    if not cat.layers:
        raise ValidationError(f"category '{cat.label}' has no layers")
    shape = np.shape(cat.layers[0])
    for i, w in enumerate(cat.layers):
        if np.shape(w) != shape or len(shape) != 2:
            raise ShapeMismatchError(f"{cat.label}/{i}: shape {np.shape(w)} differs from {shape}")
    return np.vstack([np.asarray(w, dtype=np.float64) for w in cat.layers])


def category_qr(stack: WeightStack) -> list[tuple[np.ndarray, np.ndarray]]:
    """Thin QR of every stacked category; categories are independent and run in parallel."""
    return ordered_map(lambda cat: qr_thin(stack_category(cat)), stack.categories)


def _check_pi_mode(pi: float, mode: str):
    if not pi > 0:
        raise ValidationError(f"pi must be positive, got {pi}")
    if mode not in DECOMP_MODES:
        raise ValidationError(f"unknown mode '{mode}', expected one of {DECOMP_MODES}")


def gram_aggregate(
    stack: WeightStack,
    pi: float = DEFAULT_PI,
    mode: str = DEFAULT_MODE,
    qrs: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> np.ndarray:
    """Regularized aggregate T_pi of Gram inverses.

    literal:   mean over categories of ((Q^(c))^T Q^(c) + pi I)^{-1}, which is
               I/(1+pi) because Q^(c) has orthonormal columns.
    blockwise: mean over every (category, layer) block of (Q_i^T Q_i + pi I)^{-1}.
    """
    _check_pi_mode(pi, mode)
    if qrs is None:
        qrs = category_qr(stack)
    m, n = stack.shape
    total = np.zeros((n, n))
    count = 0
    for cat, (Q, _) in zip(stack.categories, qrs):
        if mode == "literal":
            total += ridge_inverse(Q.T @ Q, pi)
            count += 1
            continue
        for i in range(len(cat.layers)):
            Qi = Q[i * m : (i + 1) * m]
            total += ridge_inverse(Qi.T @ Qi, pi)
            count += 1
    T = total / count
    return 0.5 * (T + T.T)


def is_degenerate(T: np.ndarray) -> bool:
    """True when T is a multiple of the identity, so Z is only fixed by the eigensolver's convention."""
    scale = float(np.max(np.abs(T)))
    if scale == 0.0:
        return True
    off = T - np.diag(np.diag(T))
    diag = np.diag(T)
    spread = max(float(np.max(np.abs(off))), float(diag.max() - diag.min()))
    return spread <= DEGENERATE_RTOL * scale


def hjd_decompose(
    stack: WeightStack,
    pi: float = DEFAULT_PI,
    mode: str = DEFAULT_MODE,
    floor: bool = True,
) -> JointDecomposition:
    """Decompose a weight stack into a shared basis Z plus per-layer (U_i, sigma_i).

    Args:
        stack: Categories of equally shaped m x n layers with L*m >= n.
        pi: Ridge constant of the Gram aggregation.
        mode: "blockwise" (default) or "literal".
        floor: Floor zero columns of B_i at SIGMA_FLOOR instead of failing.

    Returns:
        JointDecomposition: Factors reconstructing every layer exactly.

    Raises:
        ValidationError: Bad pi, mode or stack shape.
        NumericalError: A zero column was found and flooring is disabled.
    """
    _check_pi_mode(pi, mode)
    stack.validate(require_tall=True)
    m, n = stack.shape

    qrs = category_qr(stack)
    T = gram_aggregate(stack, pi, mode, qrs=qrs)
    degenerate = mode == "literal" or is_degenerate(T)
    eig = eigh_symmetric(T)
    Z = eig.vectors
    logger.info("T_pi diagonalized (mode=%s, n=%d, degenerate=%s)", mode, n, degenerate)

    R_map, U_map, sigma_map, floored = {}, {}, {}, []
    for cat, (Q, R) in zip(stack.categories, qrs):
        QZ = Q @ Z
        U_list, sigma_list = [], []
        for i in range(len(cat.layers)):
            B = QZ[i * m : (i + 1) * m]
            sigma = np.linalg.norm(B, axis=0)
            small = np.flatnonzero(sigma < SIGMA_FLOOR)
            if small.size:
                if not floor:
                    raise NumericalError(
                        f"zero column(s) {small.tolist()} in layer {i} of category '{cat.label}'"
                    )
                logger.warning(
                    UI_MESSAGES["warnings"]["sigma_floor"].format(i, cat.label, small.size, SIGMA_FLOOR)
                )
                sigma[small] = SIGMA_FLOOR
                floored.append(FlooredColumn(cat.label, i, small.tolist()))
            U_list.append(B / sigma)
            sigma_list.append(sigma)
        R_map[cat.label] = R
        U_map[cat.label] = U_list
        sigma_map[cat.label] = sigma_list

    return JointDecomposition(
        Z=Z,
        eigvals=eig.values,
        R=R_map,
        U=U_map,
        sigma=sigma_map,
        pi=pi,
        mode=mode,
        labels=stack.labels,
        degenerate=degenerate,
        floored=floored,
    )


def reconstruct_layer(dec: JointDecomposition, c: str | int, i: int) -> np.ndarray:
    label = dec.resolve(c)
    if not 0 <= i < dec.layers(label):
        raise ValidationError(f"layer index {i} out of range for category '{label}'")
    return (dec.U[label][i] * dec.sigma[label][i]) @ dec.Vt(label)


def reconstruction_errors(dec: JointDecomposition, stack: WeightStack) -> list[dict]:
    """Per-layer max-abs reconstruction error, absolute and relative to max|W^(c)|."""
    rows = []
    for cat in stack.categories:
        scale = max(float(np.max(np.abs(w))) for w in cat.layers)
        for i, w in enumerate(cat.layers):
            err = float(np.max(np.abs(reconstruct_layer(dec, cat.label, i) - w)))
            rows.append(
                {
                    "category": cat.label,
                    "layer": i,
                    "max_abs_error": err,
                    "relative_error": err / scale if scale > 0 else err,
                }
            )
    return rows


def stacked_orthonormality(dec: JointDecomposition, label: str) -> float:
    """max |B^T B - I| for B the vertical concatenation of the category's B_i blocks."""
    B = np.vstack([U * s for U, s in zip(dec.U[label], dec.sigma[label])])
    return float(np.max(np.abs(B.T @ B - np.eye(B.shape[1]))))


def cast_factors(dec: JointDecomposition, dtype) -> JointDecomposition:
    """Copy of `dec` with every factor cast to `dtype` (f32 tolerance experiments)."""
    return JointDecomposition(
        Z=dec.Z.astype(dtype),
        eigvals=dec.eigvals.astype(dtype),
        R={k: v.astype(dtype) for k, v in dec.R.items()},
        U={k: [u.astype(dtype) for u in v] for k, v in dec.U.items()},
        sigma={k: [s.astype(dtype) for s in v] for k, v in dec.sigma.items()},
        pi=dec.pi,
        mode=dec.mode,
        labels=list(dec.labels),
        degenerate=dec.degenerate,
        floored=list(dec.floored),
    )
