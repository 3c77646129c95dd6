"""Base adapter class for the pluggable fine-tuning schemes.

This module defines the interface every adapted linear layer implements so the
trainer, the parameter accounting and the analysis code can treat FRoD and the
baselines uniformly.
"""

from abc import ABC, abstractmethod
from app.src.core.lab_errors import ShapeMismatchError, NumericalError
import numpy as np


class AdapterLayer(ABC):
    """Abstract base class for adapted bias-free linear layers y = W' x.

    Inputs are batches of row vectors, X of shape (batch, n) mapping to
    (batch, m); single vectors of shape (n,) are accepted as well.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """Return the scheme identifier.

        Returns:
            str: Scheme name (e.g., "frod", "lora", "vera")
        """
        pass

    @property
    @abstractmethod
    def shape(self) -> tuple[int, int]:
        """Return (m, n), the output and input dimensions."""
        pass

    @abstractmethod
    def parameters(self) -> dict[str, np.ndarray]:
        """Return the trainable arrays keyed by parameter name.

        The arrays are the layer's live storage; optimizers update them in place.

        Returns:
            dict[str, np.ndarray]: Trainable tensors of this layer
        """
        pass

    @abstractmethod
    def forward(self, X: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def backward(self, X: np.ndarray, G: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Gradients of <G, forward(X)> with respect to parameters and input.

        Args:
            X: Inputs used in the forward pass, (batch, n) or (n,).
            G: Upstream gradient, (batch, m) or (m,).

        Returns:
            tuple: (gradients keyed like `parameters()`, gradient w.r.t. X)
        """
        pass

    @abstractmethod
    def merge_weights(self) -> np.ndarray:
        """Return the dense adapted weight W' (m x n)."""
        pass

    @abstractmethod
    def frozen_scalars(self) -> int:
        """Return the number of stored non-trainable scalars, shared factors excluded."""
        pass

    def param_group(self, param_name: str) -> str:
        """Return the optimizer group ("sigma", "S" or "other") of a parameter."""
        return "other"

    def trainable_count(self) -> int:
        return int(sum(p.size for p in self.parameters().values()))

    def check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.shape[1]:
            raise ShapeMismatchError(
                f"{self.name}: input dimension {X.shape[-1]} does not match n = {self.shape[1]}"
            )
        if not np.all(np.isfinite(X)):
            raise NumericalError(f"{self.name}: non-finite input")
        return X

    def check_grad(self, G: np.ndarray) -> np.ndarray:
        G = np.asarray(G, dtype=np.float64)
        if G.shape[-1] != self.shape[0]:
            raise ShapeMismatchError(
                f"{self.name}: upstream gradient dimension {G.shape[-1]} does not match m = {self.shape[0]}"
            )
        return G

    def snapshot(self) -> np.ndarray:
        """Trainable parameters flattened in `parameters()` order."""
        params = self.parameters()
        if not params:
            return np.zeros(0)
        return np.concatenate([p.ravel() for p in params.values()])

    def load_snapshot(self, flat: np.ndarray):
        offset = 0
        for p in self.parameters().values():
            p[...] = np.reshape(flat[offset : offset + p.size], p.shape)
            offset += p.size

    def __repr__(self) -> str:
        m, n = self.shape
        return f"{type(self).__name__}(m={m}, n={n}, trainable={self.trainable_count()})"
