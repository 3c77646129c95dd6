from .spectral import (
    WeylResult,
    UpdateSplit,
    OrthogonalityReport,
    SmallAngleReport,
    weyl_check,
    split_update,
    orthogonality_residual,
    angular_identity_residual,
    small_angle_residual,
    tan_alpha_proxy,
    in_rotation_band,
    require_offdiag,
)
from .pdof import pdof_rank, pdof_vote, PdofResult, lora_dimension, vera_hypothesis
from .hessian import (
    hessian_fd,
    adapter_hessian_analytic,
    frod_hessian_analytic,
    full_hessian_analytic,
    gauge_dims,
    regularized_condition,
    hessian_condition,
    quadratic_model,
    compare_hessian_blocks,
    ConditionReport,
    QuadraticModel,
)
from .audit import (
    weyl_audit,
    summarize_weyl,
    latent_orthogonality_audit,
    geometry_audit,
    commutator_audit,
    verify_decomposition,
    WEYL_TRIAL_COLUMNS,
)

__all__ = [
    "WeylResult",
    "UpdateSplit",
    "OrthogonalityReport",
    "SmallAngleReport",
    "weyl_check",
    "split_update",
    "orthogonality_residual",
    "angular_identity_residual",
    "small_angle_residual",
    "tan_alpha_proxy",
    "in_rotation_band",
    "require_offdiag",
    "pdof_rank",
    "pdof_vote",
    "PdofResult",
    "lora_dimension",
    "vera_hypothesis",
    "hessian_fd",
    "adapter_hessian_analytic",
    "frod_hessian_analytic",
    "full_hessian_analytic",
    "gauge_dims",
    "regularized_condition",
    "hessian_condition",
    "quadratic_model",
    "compare_hessian_blocks",
    "ConditionReport",
    "QuadraticModel",
    "weyl_audit",
    "summarize_weyl",
    "latent_orthogonality_audit",
    "geometry_audit",
    "commutator_audit",
    "verify_decomposition",
    "WEYL_TRIAL_COLUMNS",
]
