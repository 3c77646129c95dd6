"""Randomized audits of the spectral and geometric properties.

Every trial draws from its own SplitMix64 stream seeded by derive_seed(seed, trial),
so fanning trials out over threads yields exactly the serial aggregates.
"""

from app.src.adapter.frod_layer import FrodLayer
from app.src.adapter.sparse import sample_offdiag_support
from app.src.analysis.spectral import (
    weyl_check,
    split_update,
    orthogonality_residual,
    angular_identity_residual,
    small_angle_residual,
)
from app.src.core.lab_errors import ValidationError, InvariantViolation
from app.src.decomp.commutator import gram_commutator_norm, relative_commutator
from app.src.decomp.hjd import JointDecomposition, reconstruct_layer
from app.src.helpers.threads import ordered_map
from app.src.tensorio.rng import SplitMix64, derive_seed
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass
import numpy as np
import logging


logger = logging.getLogger(__name__)

WEYL_TRIAL_COLUMNS = ["trial", "n", "s", "eps", "nnz", "max_dev", "spec_norm_S", "sparse_bound", "passed"]
ANGULAR_TOL = 1e-10


@dataclass
class WeylTrial:
    trial: int
    n: int
    s: float
    eps: float
    nnz: int
    max_dev: float
    spec_norm_S: float
    sparse_bound: float
    passed: bool

    def row(self) -> list:
        return [getattr(self, c) for c in WEYL_TRIAL_COLUMNS]


def _pick(rng: SplitMix64, choices):
    return choices[rng.randbelow(len(choices))]


def _trial_perturbation(rng: SplitMix64, n: int, s: float, eps: float, inject_diagonal: bool):
    S = sample_offdiag_support(n, s, rng.next_u64())
    S = S.with_values((2.0 * rng.uniforms(S.nnz) - 1.0) * eps)
    if inject_diagonal:
        S = S.with_unchecked_entry(0, 0, 0.5 * eps)
    return S


def weyl_trial(
    trial: int,
    seed: int,
    n_choices=(8, 16, 32),
    s_choices=(0.05, 0.1),
    eps_choices=(0.01, 0.1),
    sigma: np.ndarray | None = None,
    inject_diagonal: bool = False,
) -> WeylTrial:
    rng = SplitMix64(derive_seed(seed, trial))
    if sigma is None:
        n = _pick(rng, n_choices)
        sigma = 0.1 + 2.9 * rng.uniforms(n)
    n = sigma.size
    s = _pick(rng, s_choices)
    eps = _pick(rng, eps_choices)
    S = _trial_perturbation(rng, n, s, eps, inject_diagonal)
    result = weyl_check(sigma, S, eps)
    return WeylTrial(
        trial=trial,
        n=n,
        s=s,
        eps=eps,
        nnz=S.nnz,
        max_dev=result.max_dev,
        spec_norm_S=result.spec_norm_S,
        sparse_bound=result.sparse_bound,
        passed=result.passed,
    )


def weyl_audit(
    trials: int,
    seed: int,
    n_choices=(8, 16, 32),
    s_choices=(0.05, 0.1),
    eps_choices=(0.01, 0.1),
    sigmas: list[np.ndarray] | None = None,
    workers: int | None = None,
) -> list[WeylTrial]:
    """Run `trials` randomized Weyl checks; with `sigmas`, trial t uses sigmas[t % len]."""
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")

    def run(t: int) -> WeylTrial:
        sigma = sigmas[t % len(sigmas)] if sigmas else None
        return weyl_trial(t, seed, n_choices, s_choices, eps_choices, sigma=sigma)

    return ordered_map(run, list(range(trials)), workers=workers)


def summarize_weyl(rows: list[WeylTrial]) -> dict:
    violations = [r.trial for r in rows if not r.passed]
    return {
        "trials": len(rows),
        "violations": len(violations),
        "violating_trials": violations[:20],
        "max_dev": max(r.max_dev for r in rows),
        "max_spec_norm_S": max(r.spec_norm_S for r in rows),
        "max_dev_over_spec": max((r.max_dev / r.spec_norm_S) if r.spec_norm_S > 0 else 0.0 for r in rows),
        "max_spec_over_bound": max((r.spec_norm_S / r.sparse_bound) if r.sparse_bound > 0 else 0.0 for r in rows),
    }


def latent_orthogonality_audit(trials: int, seed: int, n: int = 16, s: float = 0.1) -> dict:
    """trace(diag(dsigma) S) over random strictly off-diagonal S; every value must be exactly 0."""
    nonzero = 0
    for t in range(trials):
        rng = SplitMix64(derive_seed(seed, t))
        S = sample_offdiag_support(n, s, rng.next_u64())
        S = S.with_values(rng.normals(S.nnz))
        delta = rng.normals(n)
        if float(np.sum(delta * np.diag(S.to_dense()))) != 0.0:
            nonzero += 1
    return {"trials": trials, "nonzero_traces": nonzero}


def perturbed_layer(
    dec: JointDecomposition,
    label: str,
    i: int,
    s: float,
    seed: int,
    sigma_scale: float = 0.05,
    off_scale: float = 0.05,
    inject_diagonal: bool = False,
) -> FrodLayer:
    """A FRoD layer on the decomposition with random sigma and S moves, standing in for a trained one."""
    rng = SplitMix64(seed)
    layer = FrodLayer.from_decomposition(dec, label, i, s, rng.next_u64())
    layer.sigma = layer.sigma + sigma_scale * rng.normals(layer.sigma.size)
    S = layer.S.with_values(off_scale * rng.normals(layer.S.nnz))
    if inject_diagonal:
        S = S.with_unchecked_entry(0, 0, off_scale)
    layer.S = S
    return layer


def geometry_audit(
    dec: JointDecomposition,
    s: float,
    seed: int,
    inject_diagonal: bool = False,
) -> dict:
    """Split, orthogonality, angular and small-angle residuals on one perturbed layer per category."""
    rows = []
    for c, label in enumerate(dec.labels):
        layer_seed = derive_seed(seed, 1000 + c)
        layer = perturbed_layer(dec, label, 0, s, layer_seed, inject_diagonal=inject_diagonal)
        split = split_update(layer)
        ortho = orthogonality_residual(split, layer.U, layer.Vt)
        angular = angular_identity_residual(split)

        # rescale S so the rotation angle is small, then check the Taylor forms
        ratio = 0.05 * split.frob_on / split.frob_off if split.frob_off > 0 else 0.0
        small_layer = FrodLayer(layer.U, layer.Vt, layer.sigma, layer.S.with_values(layer.S.values * ratio), layer.sigma_init)
        small = small_angle_residual(split_update(small_layer))

        if ortho.latent != 0.0:
            raise InvariantViolation(f"latent orthogonality residual {ortho.latent:.3e} is not zero")
        if angular > ANGULAR_TOL:
            raise InvariantViolation(UI_MESSAGES["errors"]["angular_residual"].format(angular, ANGULAR_TOL))
        if not small.within_bound:
            raise InvariantViolation(UI_MESSAGES["errors"]["small_angle"].format(small.first_order, small.alpha**2))
        rows.append(
            {
                "category": label,
                "split": split.to_dict(),
                "orthogonality": ortho.to_dict(),
                "angular_residual": angular,
                "small_angle": small.to_dict(),
            }
        )
    return {"layers": rows, "max_angular_residual": max(r["angular_residual"] for r in rows)}


def commutator_audit(dec: JointDecomposition) -> dict:
    """Gram commutators of the reconstructed layers, labelled '<category>/<layer>'."""
    labels, mats = [], []
    for label in dec.labels:
        for i in range(dec.layers(label)):
            labels.append(f"{label}/{i}")
            mats.append(reconstruct_layer(dec, label, i))
    if len(mats) < 2:
        return {"labels": labels, "matrix": [], "relative": [], "min_offdiag_relative": None}
    raw = gram_commutator_norm(mats)
    rel = relative_commutator(mats)
    off = rel[~np.eye(len(mats), dtype=bool)]
    return {
        "labels": labels,
        "matrix": raw,
        "relative": rel,
        "min_offdiag_relative": float(off.min()),
    }


def verify_decomposition(
    dec: JointDecomposition,
    trials: int,
    eps: float,
    s: float,
    seed: int,
    inject_diagonal: bool = False,
    workers: int | None = None,
) -> tuple[dict, list[WeylTrial]]:
    """Weyl audit on the decomposition's sigma vectors plus the geometric checks.

    Raises:
        ValidationError: trials < 1.
        InvariantViolation: Any Weyl violation, diagonal support or geometric residual breach.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    if dec.Z.shape[0] < 2:
        raise ValidationError("verification needs n >= 2 for an off-diagonal perturbation")

    # an injected diagonal entry is caught by the split before any trial runs
    geometry = geometry_audit(dec, s, seed, inject_diagonal=inject_diagonal)
    sigmas = [sig for label in dec.labels for sig in dec.sigma[label]]
    rows = weyl_audit(trials, seed, s_choices=(s,), eps_choices=(eps,), sigmas=sigmas, workers=workers)
    weyl = summarize_weyl(rows)
    report = {
        "weyl": weyl,
        "geometry": geometry,
        "latent_audit": latent_orthogonality_audit(min(trials, 1000), seed, n=dec.Z.shape[0], s=s),
        "commutator": commutator_audit(dec),
    }
    if weyl["violations"]:
        raise InvariantViolation(UI_MESSAGES["errors"]["weyl_violation"].format(weyl["violations"]))
    if report["latent_audit"]["nonzero_traces"]:
        raise InvariantViolation(f"{report['latent_audit']['nonzero_traces']} nonzero latent traces")
    return report, rows
