UI_MESSAGES = {
    # Titles
    "titles": {
        "error": "Error",
        "param_counts": "Parameter Counts",
        "sweep_medians": "Sweep Medians",
        "validation": "Validation Error",
        "numerical": "Numerical Failure",
        "storage": "I/O Error",
    },
    # One-line summaries, one per command
    "summaries": {
        "gen": "wrote {} tensors ({} categories x {} layers, {}x{}) to {}",
        "decompose": "decomposed {} layers, max relative reconstruction error {:.3e}",
        "decompose_degenerate": "literal mode: T_pi is degenerate (I/(1+pi)), Z follows the eigensolver convention",
        "verify": "{} Weyl trials, {} violations; angular residual {:.3e}",
        "train": "{} epochs, final loss {:.6f}, final eval accuracy {:.4f}",
        "sweep": "{} runs over {} configurations, {} inside the rotation band",
        "landscape": "{} grid(s) of {}x{} written, center loss {:.6f}",
        "params": "weights={} trainable={} states={}",
        "pdof": "{}",
        "hessian": "tau_dot={:.6g}",
    },
    # Warnings
    "warnings": {
        "sigma_floor": "Zero column in layer {} of category '{}': floored {} singular strength(s) at {:g}",
        "density_cap": "Density s={} exceeds the off-diagonal budget for n={}; nnz capped at {}",
        "zero_block": "Parameter block {} has zero norm; its direction block is zeroed",
        "vera_hypothesis": "VeRA Jacobian rank {} differs from the r+n hypothesis {} (m={}, n={}, r={})",
        "divergence": "Loss became non-finite at epoch {} step {}; run halted",
        "flagged_cells": "{} landscape cell(s) produced non-finite loss",
    },
    # Errors
    "errors": {
        "config_not_found": "Configuration file '{}' not found.",
        "config_invalid_json": "Configuration file '{}' is not a valid JSON.",
        "unexpected_error": "An unexpected error occurred: {}",
        "invalid_path": "Invalid output path: {}",
        "reconstruction": "Reconstruction error {:.3e} exceeds {:.1e} relative to max |W|",
        "diagonal_support": "S has diagonal support at {}: latent orthogonality broken (diagonal support)",
        "weyl_violation": "{} Weyl trial(s) violated the spectral stability bound",
        "angular_residual": "Angular identity residual {:.3e} exceeds {:.1e}",
        "small_angle": "Small-angle residual {:.3e} exceeds alpha^2 = {:.3e}",
        "divergence": "Training diverged at epoch {}",
    },
}
