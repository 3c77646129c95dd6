"""Scheme registry: maps scheme names to layer builders.

Every scheme builds its adapted layer from the same inputs (the frozen base
weight plus, for FRoD variants, the joint decomposition) so the trainer never
branches on the scheme name itself.
"""

from app.src.adapter.base_layer import AdapterLayer
from app.src.adapter.baselines import (
    FullLayer,
    PissaLayer,
    VeraBases,
    lora_init,
    vera_init,
)
from app.src.adapter.frod_layer import FrodLayer
from app.src.core.lab_errors import ValidationError
from app.src.decomp.hjd import JointDecomposition
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional
import numpy as np


@dataclass
class BuildContext:
    """Everything a scheme may need to adapt one layer."""

    weight: np.ndarray
    seed: int
    r: int = 0
    s: float = 0.0
    decomposition: Optional[JointDecomposition] = None
    category: str | int = 0
    layer_index: int = 0
    vera_bases: Optional[VeraBases] = None
    extras: dict = field(default_factory=dict)


def _frod(ctx: BuildContext, s: float, train_sigma: bool, scheme: str) -> FrodLayer:
    if ctx.decomposition is None:
        raise ValidationError(f"scheme '{scheme}' needs a joint decomposition")
    return FrodLayer.from_decomposition(
        ctx.decomposition, ctx.category, ctx.layer_index, s, ctx.seed, train_sigma=train_sigma, scheme=scheme
    )


def _lora(ctx: BuildContext) -> AdapterLayer:
    m, n = ctx.weight.shape
    return lora_init(m, n, ctx.r, ctx.seed, w0=ctx.weight)


def _vera(ctx: BuildContext) -> AdapterLayer:
    m, n = ctx.weight.shape
    return vera_init(m, n, ctx.r, ctx.seed, w0=ctx.weight, bases=ctx.vera_bases)


_BUILDERS: Dict[str, Callable[[BuildContext], AdapterLayer]] = {
    "frod": lambda ctx: _frod(ctx, ctx.s, True, "frod"),
    "sigma-only": lambda ctx: _frod(ctx, 0.0, True, "sigma-only"),
    "s-only": lambda ctx: _frod(ctx, ctx.s, False, "s-only"),
    "lora": _lora,
    "vera": _vera,
    "pissa": lambda ctx: PissaLayer(ctx.weight, ctx.r),
    "full": lambda ctx: FullLayer(ctx.weight),
}


class SchemeRegistry:
    """Registry for managing adapter scheme builders."""

    def __init__(self):
        self._builders: Dict[str, Callable[[BuildContext], AdapterLayer]] = dict(_BUILDERS)

    def register(self, name: str, builder: Callable[[BuildContext], AdapterLayer]):
        """Register (or override) a scheme builder.

        Args:
            name: Scheme identifier used in configs and on the command line
            builder: Callable turning a BuildContext into an AdapterLayer
        """
        self._builders[name.lower()] = builder

    def list_schemes(self) -> list[str]:
        return sorted(self._builders)

    def is_scheme_available(self, name: str) -> bool:
        return name.lower() in self._builders

    def needs_decomposition(self, name: str) -> bool:
        return name.lower() in ("frod", "sigma-only", "s-only")

    def build(self, name: str, ctx: BuildContext) -> AdapterLayer:
        builder = self._builders.get(name.lower())
        if builder is None:
            raise ValidationError(f"unknown scheme '{name}', expected one of {self.list_schemes()}")
        return builder(ctx)


_scheme_registry = None


def get_scheme_registry() -> SchemeRegistry:
    """Get the global scheme registry instance.

    Returns:
        SchemeRegistry: The singleton scheme registry
    """
    global _scheme_registry
    if _scheme_registry is None:
        _scheme_registry = SchemeRegistry()
    return _scheme_registry
