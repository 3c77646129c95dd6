import numpy as np


def tiny_train_dict(**overrides) -> dict:
    """A train config small enough to run in well under a second."""
    data = {
        "seed": 0,
        "task": {"kind": "blobs", "classes": 2, "input_dim": 8, "samples": 128},
        "model": {"layers": 2, "m": 8, "n": 8},
        "scheme": {"name": "frod", "s": 0.1, "lr_sigma": 1e-2, "lr_S": 1e-3},
        "optim": {"epochs": 2, "batch": 32, "warm_start_epochs": 1},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return data


def numeric_grad(f, array: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function with respect to `array`, perturbed in place."""
    out = np.zeros_like(array)
    flat = array.reshape(-1)
    grad = out.reshape(-1)
    for k in range(flat.size):
        keep = flat[k]
        flat[k] = keep + h
        up = f()
        flat[k] = keep - h
        down = f()
        flat[k] = keep
        grad[k] = (up - down) / (2.0 * h)
    return out


def directional_fd(f, arrays: list[np.ndarray], directions: list[np.ndarray], h: float = 1e-5) -> float:
    """Central difference of `f` along `directions`, moving every array in place and restoring it."""
    keep = [a.copy() for a in arrays]
    for a, d in zip(arrays, directions):
        a += h * d
    up = f()
    for a, k, d in zip(arrays, keep, directions):
        a[...] = k - h * d
    down = f()
    for a, k in zip(arrays, keep):
        a[...] = k
    return (up - down) / (2.0 * h)
