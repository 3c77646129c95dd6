from .base_layer import AdapterLayer
from .sparse import SparseOffDiag, sample_offdiag_support, empty_offdiag, offdiag_nnz
from .frod_layer import FrodLayer
from .baselines import (
    LoraLayer,
    PissaLayer,
    PissaFactors,
    VeraLayer,
    VeraBases,
    FullLayer,
    lora_init,
    pissa_init,
    vera_init,
    vera_shared_bases,
)
from .registry import SchemeRegistry, BuildContext, get_scheme_registry
from .params import ParamCount, count_params
from .checkpoint import save_frod_layers, load_frod_layers

__all__ = [
    "AdapterLayer",
    "SparseOffDiag",
    "sample_offdiag_support",
    "empty_offdiag",
    "offdiag_nnz",
    "FrodLayer",
    "LoraLayer",
    "PissaLayer",
    "PissaFactors",
    "VeraLayer",
    "VeraBases",
    "FullLayer",
    "lora_init",
    "pissa_init",
    "vera_init",
    "vera_shared_bases",
    "SchemeRegistry",
    "BuildContext",
    "get_scheme_registry",
    "ParamCount",
    "count_params",
    "save_frod_layers",
    "load_frod_layers",
]
