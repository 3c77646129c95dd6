from app.src.adapter.sparse import offdiag_nnz
from app.src.core.lab_errors import ValidationError
from app.utils.constants import SCHEMES
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class ParamCount:
    """Stored weights, trainable scalars and Adam states for one scheme.

    `weights_total` keeps one n x n V per category; `weights_shared_v` counts a
    single V for the whole model. They coincide for one category.
    """

    scheme: str
    weights_total: int
    trainable: int
    optimizer_states: int
    weights_shared_v: int

    def to_dict(self) -> dict:
        return asdict(self)


def count_params(
    scheme: str,
    m: int,
    n: int,
    L: int,
    r: int = 0,
    s: float = 0.0,
    categories: int = 1,
) -> ParamCount:
    """Parameter accounting for L adapted m x n layers per category.

    frod        weights L(mn + nnz + n) + n^2, trainable L(nnz + n)
    sigma-only  frod with nnz = 0
    s-only      frod weights, trainable L nnz
    lora/pissa  weights L(mn + mr + nr), trainable L(mr + nr)
    vera        weights L(mn + r + m) + mr + nr, trainable L(r + m)
    full        weights L mn, trainable L mn

    nnz uses the same rounding and off-diagonal cap as the support sampler.
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"invalid scheme '{scheme}', expected one of {SCHEMES}")
    if min(m, n, L, categories) < 1:
        raise ValidationError(f"dimensions must be positive: m={m} n={n} L={L} categories={categories}")
    if r < 0 or not 0.0 <= s <= 1.0:
        raise ValidationError(f"need r >= 0 and s in [0, 1], got r={r} s={s}")

    shared = 0
    if scheme in ("frod", "sigma-only", "s-only"):
        nnz = 0 if scheme == "sigma-only" else (offdiag_nnz(n, s) if n >= 2 else 0)
        per_layer = m * n + nnz + n
        trainable = L * (nnz if scheme == "s-only" else nnz + n)
        shared = n * n
    elif scheme in ("lora", "pissa"):
        per_layer = m * n + m * r + n * r
        trainable = L * (m * r + n * r)
    elif scheme == "vera":
        per_layer = m * n + r + m
        trainable = L * (r + m)
        shared = m * r + n * r
    else:
        per_layer = m * n
        trainable = L * m * n

    per_category_layers = L * per_layer
    if scheme == "vera":
        # the random bases are shared model-wide, not per category
        weights_total = categories * per_category_layers + shared
        weights_shared_v = weights_total
    else:
        weights_total = categories * (per_category_layers + shared)
        weights_shared_v = categories * per_category_layers + shared
    trainable *= categories
    return ParamCount(
        scheme=scheme,
        weights_total=weights_total,
        trainable=trainable,
        optimizer_states=2 * trainable,
        weights_shared_v=weights_shared_v,
    )
