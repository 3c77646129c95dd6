from app.src.adapter.base_layer import AdapterLayer
from app.src.core.lab_errors import ValidationError
from app.src.linalg import svd_thin
from app.src.tensorio.rng import SplitMix64
from dataclasses import dataclass
import numpy as np


def _check_rank(r: int, m: int, n: int):
    if not 1 <= r <= min(m, n):
        raise ValidationError(f"rank r={r} outside [1, {min(m, n)}]")


class LoraLayer(AdapterLayer):
    """W0 + B A with frozen W0, trainable B (m x r) and A (r x n)."""

    def __init__(self, W0: np.ndarray, B: np.ndarray, A: np.ndarray, scheme: str = "lora"):
        self.W0 = np.asarray(W0, dtype=np.float64)
        self.B = np.array(B, dtype=np.float64)
        self.A = np.array(A, dtype=np.float64)
        self._scheme = scheme

    @property
    def name(self) -> str:
        return self._scheme

    @property
    def shape(self) -> tuple[int, int]:
        return self.W0.shape

    @property
    def rank(self) -> int:
        return self.A.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"B": self.B, "A": self.A}

    def frozen_scalars(self) -> int:
        return self.W0.size

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = self.check_input(X)
        return X @ self.W0.T + (X @ self.A.T) @ self.B.T

    def backward(self, X: np.ndarray, G: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        X = self.check_input(X)
        G = self.check_grad(G)
        X2, G2 = np.atleast_2d(X), np.atleast_2d(G)
        AX = X2 @ self.A.T
        grads = {"B": G2.T @ AX, "A": (G2 @ self.B).T @ X2}
        return grads, G @ self.merge_weights()

    def merge_weights(self) -> np.ndarray:
        return self.W0 + self.B @ self.A


def lora_init(m: int, n: int, r: int, seed: int, w0: np.ndarray | None = None) -> LoraLayer:
    """A ~ N(0, 1/r), B = 0, so the adapted layer starts at W0."""
    _check_rank(r, m, n)
    W0 = np.zeros((m, n)) if w0 is None else np.asarray(w0, dtype=np.float64)
    if W0.shape != (m, n):
        raise ValidationError(f"base weight shape {W0.shape} differs from {(m, n)}")
    A = SplitMix64(seed).normals(r * n).reshape(r, n) / np.sqrt(r)
    return LoraLayer(W0=W0, B=np.zeros((m, r)), A=A)


@dataclass
class PissaFactors:
    B: np.ndarray
    A: np.ndarray
    W_residual: np.ndarray


def pissa_init(W: np.ndarray, r: int) -> PissaFactors:
    """Principal factors B = U_r S_r^1/2, A = S_r^1/2 V_r^T and the frozen residual W - BA."""
    W = np.asarray(W, dtype=np.float64)
    m, n = W.shape
    _check_rank(r, m, n)
    U, S, V = svd_thin(W)
    root = np.sqrt(S[:r])
    B = U[:, :r] * root
    A = root[:, None] * V[:, :r].T
    return PissaFactors(B=B, A=A, W_residual=W - B @ A)


class PissaLayer(LoraLayer):
    """LoRA layer whose factors start on the dominant singular directions of W."""

    def __init__(self, W: np.ndarray, r: int):
        factors = pissa_init(W, r)
        super().__init__(W0=factors.W_residual, B=factors.B, A=factors.A, scheme="pissa")


@dataclass(frozen=True)
class VeraBases:
    """Frozen random projections shared by every layer of one shape."""

    B: np.ndarray
    A: np.ndarray


def vera_shared_bases(m: int, n: int, r: int, seed: int) -> VeraBases:
    rng = SplitMix64(seed)
    A = rng.normals(r * n).reshape(r, n) / np.sqrt(n)
    B = rng.normals(m * r).reshape(m, r) / np.sqrt(max(r, 1))
    return VeraBases(B=B, A=A)


class VeraLayer(AdapterLayer):
    """W0 + diag(b) B diag(d) A with shared frozen B, A and trainable d (r), b (m)."""

    def __init__(self, W0: np.ndarray, bases: VeraBases, d: np.ndarray, b: np.ndarray):
        self.W0 = np.asarray(W0, dtype=np.float64)
        self.bases = bases
        self.d = np.array(d, dtype=np.float64)
        self.b = np.array(b, dtype=np.float64)

    @property
    def name(self) -> str:
        return "vera"

    @property
    def shape(self) -> tuple[int, int]:
        return self.W0.shape

    def parameters(self) -> dict[str, np.ndarray]:
        return {"d": self.d, "b": self.b}

    def frozen_scalars(self) -> int:
        return self.W0.size

    def delta(self) -> np.ndarray:
        return (self.b[:, None] * self.bases.B * self.d) @ self.bases.A

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = self.check_input(X)
        h = X @ self.bases.A.T
        return X @ self.W0.T + ((h * self.d) @ self.bases.B.T) * self.b

    def backward(self, X: np.ndarray, G: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        X = self.check_input(X)
        G = self.check_grad(G)
        X2, G2 = np.atleast_2d(X), np.atleast_2d(G)
        h = X2 @ self.bases.A.T
        z = (h * self.d) @ self.bases.B.T
        gb = (G2 * self.b) @ self.bases.B
        grads = {"d": (gb * h).sum(axis=0), "b": (G2 * z).sum(axis=0)}
        return grads, G @ self.merge_weights()

    def merge_weights(self) -> np.ndarray:
        return self.W0 + self.delta()


def vera_init(
    m: int,
    n: int,
    r: int,
    seed: int,
    w0: np.ndarray | None = None,
    bases: VeraBases | None = None,
    d_init: float = 0.1,
) -> VeraLayer:
    if r < 1:
        raise ValidationError(f"VeRA rank must be >= 1, got {r}")
    bases = bases or vera_shared_bases(m, n, r, seed)
    W0 = np.zeros((m, n)) if w0 is None else np.asarray(w0, dtype=np.float64)
    return VeraLayer(W0=W0, bases=bases, d=np.full(r, d_init), b=np.zeros(m))


class FullLayer(AdapterLayer):
    """Full fine-tuning: the dense weight itself is the parameter."""

    def __init__(self, W: np.ndarray):
        self.W = np.array(W, dtype=np.float64)

    @property
    def name(self) -> str:
        return "full"

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape

    def parameters(self) -> dict[str, np.ndarray]:
        return {"W": self.W}

    def frozen_scalars(self) -> int:
        return 0

    def forward(self, X: np.ndarray) -> np.ndarray:
        X = self.check_input(X)
        return X @ self.W.T

    def backward(self, X: np.ndarray, G: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        X = self.check_input(X)
        G = self.check_grad(G)
        return {"W": np.atleast_2d(G).T @ np.atleast_2d(X)}, G @ self.W

    def merge_weights(self) -> np.ndarray:
        return self.W.copy()
