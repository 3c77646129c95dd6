from app.src.core.lab_errors import DivergenceError, ShapeMismatchError
from dataclasses import dataclass, field
import numpy as np


@dataclass
class AdamState:
    """First and second moments of one parameter array plus its step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(param, dtype=np.float64), v=np.zeros_like(param, dtype=np.float64))


def adamw_step(
    state: AdamState,
    params: np.ndarray,
    grads: np.ndarray,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> np.ndarray:
    """One decoupled-decay Adam update, applied to `params` in place.

    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.shape:
        raise ShapeMismatchError(f"gradient shape {grads.shape} differs from parameter shape {params.shape}")
    if not np.all(np.isfinite(grads)):
        raise DivergenceError("non-finite gradient")
    beta1, beta2 = betas
    state.step += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grads
    state.v *= beta2
    state.v += (1.0 - beta2) * grads * grads
    m_hat = state.m / (1.0 - beta1**state.step)
    v_hat = state.v / (1.0 - beta2**state.step)
    params -= lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * params)
    return params


@dataclass
class ParamRef:
    key: str
    array: np.ndarray
    group: str


@dataclass
class AdamW:
    """Grouped AdamW over live parameter arrays.

    Groups whose base learning rate is zero are never touched, so their
    parameters stay bitwise identical for the whole run.
    """

    params: list[ParamRef]
    base_lrs: dict[str, float]
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: dict[str, float] = field(default_factory=dict)
    states: dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self):
        for ref in self.params:
            self.states[ref.key] = AdamState.zeros_like(ref.array)

    def active(self) -> list[ParamRef]:
        return [ref for ref in self.params if self.base_lrs.get(ref.group, 0.0) > 0.0]

    def trainable_count(self) -> int:
        return int(sum(ref.array.size for ref in self.params))

    def step(self, grads: dict[str, np.ndarray], lrs: dict[str, float]):
        for ref in self.active():
            adamw_step(
                self.states[ref.key],
                ref.array,
                grads[ref.key],
                lrs[ref.group],
                self.betas,
                self.eps,
                self.weight_decay.get(ref.group, 0.0),
            )
