from .kernels import (
    EigResult,
    qr_thin,
    eigh_symmetric,
    svd_thin,
    svd_values,
    spectral_norm,
    ridge_inverse,
    solve_spd,
    fix_column_signs,
    column_sign_flips,
)

__all__ = [
    "EigResult",
    "qr_thin",
    "eigh_symmetric",
    "svd_thin",
    "svd_values",
    "spectral_norm",
    "ridge_inverse",
    "solve_spd",
    "fix_column_signs",
    "column_sign_flips",
]
