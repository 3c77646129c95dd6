from app.src.tensorio.stack import WeightStack, CategoryStack
from .hjd import (
    JointDecomposition,
    stack_category,
    gram_aggregate,
    hjd_decompose,
    reconstruct_layer,
    reconstruction_errors,
    stacked_orthonormality,
    cast_factors,
    is_degenerate,
)
from .commutator import gram_commutator_norm, relative_commutator
from .serialize import decomposition_to_container, decomposition_from_container

__all__ = [
    "WeightStack",
    "CategoryStack",
    "JointDecomposition",
    "stack_category",
    "gram_aggregate",
    "hjd_decompose",
    "reconstruct_layer",
    "reconstruction_errors",
    "stacked_orthonormality",
    "cast_factors",
    "is_degenerate",
    "gram_commutator_norm",
    "relative_commutator",
    "decomposition_to_container",
    "decomposition_from_container",
]
