from .container import (
    NamedTensor,
    TensorContainer,
    write_container,
    read_container,
    encode_container,
    decode_container,
)
from .rng import SplitMix64, derive_seed
from .stack import WeightStack, CategoryStack
from .synthetic import generate_synthetic_stack

__all__ = [
    "NamedTensor",
    "TensorContainer",
    "write_container",
    "read_container",
    "encode_container",
    "decode_container",
    "SplitMix64",
    "derive_seed",
    "WeightStack",
    "CategoryStack",
    "generate_synthetic_stack",
]
