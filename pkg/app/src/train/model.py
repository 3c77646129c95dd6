from app.src.adapter.base_layer import AdapterLayer
from app.src.core.lab_errors import ValidationError, ShapeMismatchError
from app.src.train.optim import ParamRef
from abc import ABC, abstractmethod
import numpy as np
import copy


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient with respect to the logits."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    b = logits.shape[0]
    rows = np.arange(b)
    loss = float(-np.mean(np.log(probs[rows, y] + 1e-300)))
    grad = probs.copy()
    grad[rows, y] -= 1.0
    return loss, grad / b


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


class AdaptedModel(ABC):
    """A small classifier whose linear maps are adapter layers.

    Layer names are `<category>/<index>`; parameter keys are `<layer>/<param>`.
    Logits are the first `classes` output coordinates.
    """

    def __init__(self, layers: dict[str, AdapterLayer], classes: int):
        if not layers:
            raise ValidationError("model needs at least one layer")
        width = next(iter(layers.values())).shape[0]
        if classes > width:
            raise ValidationError(f"{classes} classes do not fit in width {width}")
        self.layers = layers
        self.classes = classes

    @abstractmethod
    def logits(self, X: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def loss_and_grads(self, X: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        pass

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        return softmax_cross_entropy(self.logits(X), y)[0]

    def accuracy(self, X: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(np.argmax(self.logits(X), axis=1) == y))

    def evaluate(self, X: np.ndarray, y: np.ndarray) -> tuple[float, float]:
        logits = self.logits(X)
        loss = softmax_cross_entropy(logits, y)[0]
        return loss, float(np.mean(np.argmax(logits, axis=1) == y))

    def param_refs(self) -> list[ParamRef]:
        return [
            ParamRef(key=f"{lname}/{pname}", array=array, group=layer.param_group(pname))
            for lname, layer in self.layers.items()
            for pname, array in layer.parameters().items()
        ]

    def block_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(ref.key, ref.array.shape) for ref in self.param_refs()]

    def flat_params(self) -> np.ndarray:
        refs = self.param_refs()
        if not refs:
            return np.zeros(0)
        return np.concatenate([ref.array.ravel() for ref in refs])

    def set_flat_params(self, theta: np.ndarray):
        refs = self.param_refs()
        total = sum(ref.array.size for ref in refs)
        if theta.shape != (total,):
            raise ShapeMismatchError(f"parameter vector has shape {theta.shape}, expected ({total},)")
        offset = 0
        for ref in refs:
            ref.array[...] = theta[offset : offset + ref.array.size].reshape(ref.array.shape)
            offset += ref.array.size

    def clone(self) -> "AdaptedModel":
        return copy.deepcopy(self)

    def merged_weights(self) -> dict[str, np.ndarray]:
        return {name: layer.merge_weights() for name, layer in self.layers.items()}

    def _pad(self, dlogits: np.ndarray, width: int) -> np.ndarray:
        G = np.zeros(dlogits.shape[:-1] + (width,))
        G[..., : self.classes] = dlogits
        return G


class MlpModel(AdaptedModel):
    """Bias-free stack of square layers with tanh between them."""

    def _ordered(self) -> list[tuple[str, AdapterLayer]]:
        return list(self.layers.items())

    def logits(self, X: np.ndarray) -> np.ndarray:
        h = X
        ordered = self._ordered()
        for k, (_, layer) in enumerate(ordered):
            h = layer.forward(h)
            if k < len(ordered) - 1:
                h = np.tanh(h)
        return h[:, : self.classes]

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        ordered = self._ordered()
        inputs = []
        h = X
        for k, (_, layer) in enumerate(ordered):
            inputs.append(h)
            h = layer.forward(h)
            if k < len(ordered) - 1:
                h = np.tanh(h)
        loss, dlogits = softmax_cross_entropy(h[:, : self.classes], y)

        grads = {}
        G = self._pad(dlogits, h.shape[1])
        for k in range(len(ordered) - 1, -1, -1):
            lname, layer = ordered[k]
            layer_grads, dX = layer.backward(inputs[k], G)
            for pname, g in layer_grads.items():
                grads[f"{lname}/{pname}"] = g
            if k > 0:
                # inputs[k] = tanh(z_{k-1})
                G = dX * (1.0 - inputs[k] ** 2)
        return loss, grads


class AttentionModel(AdaptedModel):
    """Residual single-head attention blocks over token sequences, mean-pooled.

    Block l maps h -> h + O_l softmax(Q_l h (K_l h)^T / sqrt(d)) V_l h with
    layers named `q/l`, `k/l`, `v/l`, `o/l`.
    """

    def __init__(self, layers: dict[str, AdapterLayer], classes: int):
        super().__init__(layers, classes)
        blocks = sorted({int(name.split("/")[1]) for name in layers})
        for l in blocks:
            for c in "qkvo":
                if f"{c}/{l}" not in layers:
                    raise ValidationError(f"attention block {l} lacks layer '{c}/{l}'")
        self.blocks = blocks

    def _apply(self, name: str, X: np.ndarray) -> np.ndarray:
        b, T, d = X.shape
        return self.layers[name].forward(X.reshape(b * T, d)).reshape(b, T, -1)

    def _block_forward(self, l: int, h: np.ndarray) -> dict:
        d = h.shape[-1]
        Q, K, V = (self._apply(f"{c}/{l}", h) for c in "qkv")
        A = _softmax(Q @ K.transpose(0, 2, 1) / np.sqrt(d))
        H = A @ V
        out = h + self._apply(f"o/{l}", H)
        return {"h": h, "Q": Q, "K": K, "V": V, "A": A, "H": H, "out": out}

    def logits(self, X: np.ndarray) -> np.ndarray:
        h = X
        for l in self.blocks:
            h = self._block_forward(l, h)["out"]
        return h.mean(axis=1)[:, : self.classes]

    def _layer_backward(self, name: str, X: np.ndarray, G: np.ndarray, grads: dict) -> np.ndarray:
        b, T, d = X.shape
        layer_grads, dX = self.layers[name].backward(X.reshape(b * T, d), G.reshape(b * T, -1))
        for pname, g in layer_grads.items():
            grads[f"{name}/{pname}"] = g
        return dX.reshape(b, T, d)

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        caches = []
        h = X
        for l in self.blocks:
            cache = self._block_forward(l, h)
            caches.append((l, cache))
            h = cache["out"]
        b, T, d = h.shape
        loss, dlogits = softmax_cross_entropy(h.mean(axis=1)[:, : self.classes], y)

        grads = {}
        dh = np.broadcast_to(self._pad(dlogits, d)[:, None, :] / T, (b, T, d)).copy()
        for l, c in reversed(caches):
            dH = self._layer_backward(f"o/{l}", c["H"], dh, grads)
            dA = dH @ c["V"].transpose(0, 2, 1)
            dV = c["A"].transpose(0, 2, 1) @ dH
            dscores = c["A"] * (dA - (dA * c["A"]).sum(axis=-1, keepdims=True)) / np.sqrt(d)
            dQ = dscores @ c["K"]
            dK = dscores.transpose(0, 2, 1) @ c["Q"]
            dx = dh.copy()
            dx += self._layer_backward(f"q/{l}", c["h"], dQ, grads)
            dx += self._layer_backward(f"k/{l}", c["h"], dK, grads)
            dx += self._layer_backward(f"v/{l}", c["h"], dV, grads)
            dh = dx
        return loss, grads


def build_model(kind: str, layers: dict[str, AdapterLayer], classes: int) -> AdaptedModel:
    if kind == "tiny-attention":
        return AttentionModel(layers, classes)
    return MlpModel(layers, classes)
