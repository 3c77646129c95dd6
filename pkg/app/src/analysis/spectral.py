"""Spectral stability and the on/off-axis geometry of FRoD updates."""

from app.src.adapter.frod_layer import FrodLayer
from app.src.adapter.sparse import SparseOffDiag
from app.src.core.lab_errors import ValidationError, InvariantViolation
from app.src.linalg import svd_values, spectral_norm
from app.utils.constants import WEYL_SLACK, ROTATION_BAND
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass
import numpy as np
import math


_TINY = 1e-300


def require_offdiag(S: SparseOffDiag):
    diagonal = S.diagonal_positions()
    if diagonal:
        raise InvariantViolation(UI_MESSAGES["errors"]["diagonal_support"].format(diagonal))


@dataclass
class WeylResult:
    max_dev: float
    deviations: np.ndarray
    spec_norm_S: float
    sparse_bound: float
    passed: bool


def weyl_check(sigma: np.ndarray, S: SparseOffDiag, eps_bound: float) -> WeylResult:
    """Check |sigma_k(diag(sigma) + S) - sigma_k| <= ||S||_2 <= sqrt(nnz) eps."""
    require_offdiag(S)
    sigma = np.asarray(sigma, dtype=np.float64)
    if S.nnz and float(np.max(np.abs(S.values))) > eps_bound:
        raise ValidationError(
            f"S entry {float(np.max(np.abs(S.values))):.3e} exceeds the bound eps = {eps_bound:.3e}"
        )
    dense = S.to_dense()
    perturbed = svd_values(np.diag(sigma) + dense)
    reference = np.sort(np.abs(sigma))[::-1]
    deviations = np.abs(perturbed - reference)
    max_dev = float(deviations.max()) if deviations.size else 0.0
    spec = spectral_norm(dense)
    bound = math.sqrt(S.nnz) * eps_bound
    passed = max_dev <= spec + WEYL_SLACK and spec <= bound + WEYL_SLACK
    return WeylResult(max_dev=max_dev, deviations=deviations, spec_norm_S=spec, sparse_bound=bound, passed=passed)


@dataclass
class UpdateSplit:
    dW_on: np.ndarray
    dW_off: np.ndarray
    alpha: float
    frob_on: float
    frob_off: float
    frob_total: float
    delta_sigma: np.ndarray
    S_dense: np.ndarray

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "frob_on": self.frob_on,
            "frob_off": self.frob_off,
            "frob_total": self.frob_total,
        }


def split_update(layer: FrodLayer) -> UpdateSplit:
    """Split the adapter update into on-axis U diag(dsigma) Vt and off-axis U S Vt."""
    require_offdiag(layer.S)
    delta = layer.delta_sigma()
    S_dense = layer.S.to_dense()
    dW_on = (layer.U * delta) @ layer.Vt
    dW_off = (layer.U @ S_dense) @ layer.Vt
    frob_on = float(np.linalg.norm(dW_on))
    frob_off = float(np.linalg.norm(dW_off))
    return UpdateSplit(
        dW_on=dW_on,
        dW_off=dW_off,
        alpha=math.atan2(frob_off, frob_on),
        frob_on=frob_on,
        frob_off=frob_off,
        frob_total=float(np.linalg.norm(dW_on + dW_off)),
        delta_sigma=delta,
        S_dense=S_dense,
    )


@dataclass
class OrthogonalityReport:
    latent: float
    ambient: float
    gram_deviation: float

    def to_dict(self) -> dict:
        return {"latent": self.latent, "ambient": self.ambient, "gram_deviation": self.gram_deviation}


def orthogonality_residual(split: UpdateSplit, U: np.ndarray, Vt: np.ndarray) -> OrthogonalityReport:
    """Normalized Frobenius inner product of the on- and off-axis parts.

    `latent` is |trace(diag(dsigma) S)| scaled, which is structurally zero for a
    strictly off-diagonal S. `ambient` measures the same product for the mapped
    updates; it vanishes only as far as U and Vt are orthonormal, which
    `gram_deviation` quantifies.
    """
    latent_num = abs(float(np.sum(split.delta_sigma * np.diag(split.S_dense))))
    latent_den = float(np.linalg.norm(split.delta_sigma)) * float(np.linalg.norm(split.S_dense)) + _TINY
    ambient_num = abs(float(np.sum(split.dW_on * split.dW_off)))
    ambient_den = split.frob_on * split.frob_off + _TINY
    n = U.shape[1]
    gram = max(
        float(np.max(np.abs(U.T @ U - np.eye(n)))),
        float(np.max(np.abs(Vt @ Vt.T - np.eye(Vt.shape[0])))),
    )
    return OrthogonalityReport(latent=latent_num / latent_den, ambient=ambient_num / ambient_den, gram_deviation=gram)


def _unit(M: np.ndarray, norm: float) -> np.ndarray:
    return M / norm if norm > 0 else np.zeros_like(M)


def _total_norm(split: UpdateSplit) -> float:
    total = math.hypot(split.frob_on, split.frob_off)
    if total == 0.0:
        raise ValidationError("zero total update: the angular form is undefined")
    return total


def angular_identity_residual(split: UpdateSplit) -> float:
    """|| dW - T (cos a U_on + sin a U_off) ||_F / T with T = sqrt(on^2 + off^2)."""
    total = _total_norm(split)
    u_on = _unit(split.dW_on, split.frob_on)
    u_off = _unit(split.dW_off, split.frob_off)
    model = total * (math.cos(split.alpha) * u_on + math.sin(split.alpha) * u_off)
    return float(np.linalg.norm(split.dW_on + split.dW_off - model)) / total


@dataclass
class SmallAngleReport:
    alpha: float
    first_order: float
    second_order: float
    within_bound: bool

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "first_order": self.first_order,
            "second_order": self.second_order,
            "within_bound": self.within_bound,
        }


def small_angle_residual(split: UpdateSplit) -> SmallAngleReport:
    """Residuals of the small-rotation forms of the update.

    first_order:  || dW - ||dW_on|| (U_on + a U_off) || / T, bounded by a^2 for a <= 0.1
    second_order: || dW - T ((1 - a^2/2) U_on + a U_off) || / T, O(a^3)
    """
    total = _total_norm(split)
    a = split.alpha
    u_on = _unit(split.dW_on, split.frob_on)
    u_off = _unit(split.dW_off, split.frob_off)
    dW = split.dW_on + split.dW_off
    first = float(np.linalg.norm(dW - split.frob_on * (u_on + a * u_off))) / total
    second = float(np.linalg.norm(dW - total * ((1.0 - 0.5 * a * a) * u_on + a * u_off))) / total
    # rounding slack for a ~ 0
    return SmallAngleReport(alpha=a, first_order=first, second_order=second, within_bound=first <= a * a + 1e-12)


def tan_alpha_proxy(s: float, lr_S: float, lr_sigma: float, n: int) -> float:
    """Learning-rate proxy tan(alpha) = sqrt(s n) lr_S / lr_sigma."""
    if not lr_sigma > 0:
        raise ValidationError("tan(alpha) proxy is undefined for lr_sigma = 0 (S-only run)")
    return math.sqrt(s * n) * lr_S / lr_sigma


def in_rotation_band(value: float | None, band: tuple[float, float] = ROTATION_BAND) -> bool:
    return value is not None and band[0] <= value <= band[1]
