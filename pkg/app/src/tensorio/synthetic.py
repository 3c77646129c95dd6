from app.src.core.lab_errors import ValidationError
from app.src.tensorio.rng import SplitMix64
from app.src.tensorio.stack import WeightStack, CategoryStack
import numpy as np
import logging


logger = logging.getLogger(__name__)

SYNTHETIC_DISTS = ("gaussian", "trained-task")


def default_labels(categories: int) -> list[str]:
    base = ["q", "k", "v", "o"]
    if categories <= len(base):
        return base[:categories]
    return [f"c{i}" for i in range(categories)]


def generate_synthetic_stack(
    seed: int,
    categories: int,
    layers: int,
    m: int,
    n: int,
    dist: str = "gaussian",
    labels: list[str] | None = None,
) -> WeightStack:
    """Deterministic stand-in for a pretrained weight stack.

    `gaussian` draws every entry from N(0, 1/n) in category-major, layer-major,
    row-major order from one SplitMix64 stream. `trained-task` adds to that a
    low-rank component shared by all layers of a category with geometrically
    decaying strengths, which is how fine-tuned projections tend to look.
    """
    if min(categories, layers, m, n) < 1:
        raise ValidationError(
            f"zero dimension: categories={categories} layers={layers} m={m} n={n}"
        )
    if dist not in SYNTHETIC_DISTS:
        raise ValidationError(f"unknown distribution '{dist}', expected one of {SYNTHETIC_DISTS}")
    labels = labels or default_labels(categories)
    if len(labels) != categories:
        raise ValidationError(f"{len(labels)} labels given for {categories} categories")

    rng = SplitMix64(seed)
    scale = 1.0 / np.sqrt(n)
    cats = []
    for label in labels:
        mats = [rng.normals(m * n).reshape(m, n) * scale for _ in range(layers)]
        cats.append(CategoryStack(label=label, layers=mats))

    if dist == "trained-task":
        rank = max(1, min(m, n) // 4)
        strengths = 2.0 * 0.5 ** np.arange(rank)
        for cat in cats:
            left = rng.normals(m * rank).reshape(m, rank) / np.sqrt(m)
            right = rng.normals(rank * n).reshape(rank, n) / np.sqrt(n)
            shared = left @ np.diag(strengths) @ right
            cat.layers = [w + shared for w in cat.layers]

    logger.debug("generated %s stack: %d x %d layers of %dx%d", dist, categories, layers, m, n)
    return WeightStack(categories=cats)
