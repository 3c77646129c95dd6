from app.src.core.lab_errors import ValidationError, ShapeMismatchError
from app.src.tensorio.container import TensorContainer
from dataclasses import dataclass, field
import numpy as np
import re


_LAYER_NAME = re.compile(r"^cat/(?P<label>[^/]+)/layer/(?P<index>\d+)$")


@dataclass
class CategoryStack:
    """One group of structurally analogous matrices, e.g. every layer's query projection."""

    label: str
    layers: list[np.ndarray] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.layers[0].shape


@dataclass
class WeightStack:
    categories: list[CategoryStack] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.categories[0].shape

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.categories]

    def category(self, label: str) -> CategoryStack:
        for cat in self.categories:
            if cat.label == label:
                return cat
        raise ValidationError(f"unknown category '{label}'")

    def matrices(self) -> list[np.ndarray]:
        return [w for cat in self.categories for w in cat.layers]

    def validate(self, require_tall: bool = False):
        if not self.categories:
            raise ValidationError("weight stack has no categories")
        seen = set()
        m, n = None, None
        for cat in self.categories:
            if cat.label in seen:
                raise ValidationError(f"duplicate category label '{cat.label}'")
            seen.add(cat.label)
            if not cat.layers:
                raise ValidationError(f"category '{cat.label}' has no layers")
            for i, w in enumerate(cat.layers):
                if w.ndim != 2:
                    raise ShapeMismatchError(f"{cat.label}/{i}: expected a matrix, got shape {w.shape}")
                if m is None:
                    m, n = w.shape
                elif w.shape != (m, n):
                    raise ShapeMismatchError(
                        f"{cat.label}/{i}: shape {w.shape} differs from {(m, n)}"
                    )
                if not np.all(np.isfinite(w)):
                    raise ValidationError(f"{cat.label}/{i}: non-finite entries")
            if require_tall and len(cat.layers) * m < n:
                raise ValidationError(
                    f"category '{cat.label}': L*m = {len(cat.layers) * m} < n = {n}, thin QR impossible"
                )

    def to_container(self, dtype: str = "f64") -> TensorContainer:
        c = TensorContainer()
        for cat in self.categories:
            for i, w in enumerate(cat.layers):
                c.add(f"cat/{cat.label}/layer/{i}", w, dtype=dtype)
        return c

    @classmethod
    def from_container(cls, c: TensorContainer) -> "WeightStack":
        grouped: dict[str, dict[int, np.ndarray]] = {}
        order: list[str] = []
        for t in c:
            match = _LAYER_NAME.match(t.name)
            if match is None:
                continue
            label = match["label"]
            if label not in grouped:
                grouped[label] = {}
                order.append(label)
            grouped[label][int(match["index"])] = np.asarray(t.data, dtype=np.float64)
        if not order:
            raise ValidationError("container holds no 'cat/<label>/layer/<i>' tensors")
        categories = []
        for label in order:
            layers = grouped[label]
            if sorted(layers) != list(range(len(layers))):
                raise ValidationError(f"category '{label}': layer indices are not contiguous from 0")
            categories.append(CategoryStack(label=label, layers=[layers[i] for i in range(len(layers))]))
        stack = cls(categories=categories)
        stack.validate()
        return stack
