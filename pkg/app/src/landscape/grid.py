from app.src.core.lab_errors import ValidationError, ShapeMismatchError
from app.src.helpers.report_io import write_csv, write_json_report
from app.src.helpers.threads import ordered_map
from app.src.landscape.directions import Direction
from app.src.train.model import AdaptedModel
from app.utils.constants import DEFAULT_HALF_RANGE, DEFAULT_GRID_STEPS
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass
from pathlib import Path
from typing import Callable
import numpy as np
import threading
import logging
import math


logger = logging.getLogger(__name__)

GRID_COLUMNS = ["alpha", "beta", "loss", "flag"]


class ModelLoss:
    """Eval-split loss of `model` at a parameter vector, safe to call from many threads.

    Each thread works on its own copy of the model, so the caller's model is
    never mutated.
    """

    def __init__(self, model: AdaptedModel, X: np.ndarray, y: np.ndarray):
        self.model = model
        self.X = X
        self.y = y
        self._local = threading.local()

    def __call__(self, theta: np.ndarray) -> float:
        clone = getattr(self._local, "model", None)
        if clone is None:
            clone = self._local.model = self.model.clone()
        clone.set_flat_params(theta)
        return clone.loss(self.X, self.y)


@dataclass
class LandscapeGrid:
    alphas: np.ndarray
    betas: np.ndarray
    loss: np.ndarray
    flags: np.ndarray
    center: str = "trained"

    @property
    def center_loss(self) -> float:
        return float(self.loss[len(self.alphas) // 2, len(self.betas) // 2])

    def rows(self) -> list[list]:
        return [
            [float(a), float(b), float(self.loss[i, j]), bool(self.flags[i, j])]
            for i, a in enumerate(self.alphas)
            for j, b in enumerate(self.betas)
        ]


def grid_axis(half_range: float, steps: int) -> np.ndarray:
    if steps < 1 or steps % 2 == 0:
        raise ValidationError(f"grid steps must be odd so the center is sampled, got {steps}")
    if not half_range > 0:
        raise ValidationError(f"half range must be > 0, got {half_range}")
    mid = steps // 2
    if mid == 0:
        return np.zeros(1)
    return (np.arange(steps) - mid) * (half_range / mid)


def loss_grid(
    loss_fn: Callable[[np.ndarray], float],
    theta: np.ndarray,
    d1: Direction | np.ndarray,
    d2: Direction | np.ndarray,
    half_range: float = DEFAULT_HALF_RANGE,
    steps: int = DEFAULT_GRID_STEPS,
    workers: int | None = None,
    center: str = "trained",
) -> LandscapeGrid:
    """Loss at theta + a d1 + b d2 over a symmetric steps x steps grid.

    Rows run in parallel; each cell lands in its own slot, and the center
    cell evaluates theta itself. Non-finite cells are flagged and kept.
    """
    theta = np.asarray(theta, dtype=np.float64)
    v1 = d1.vector if isinstance(d1, Direction) else np.asarray(d1, dtype=np.float64)
    v2 = d2.vector if isinstance(d2, Direction) else np.asarray(d2, dtype=np.float64)
    if v1.shape != theta.shape or v2.shape != theta.shape:
        raise ShapeMismatchError(f"directions {v1.shape}, {v2.shape} do not match theta {theta.shape}")
    axis = grid_axis(half_range, steps)
    mid = steps // 2

    def row(i: int) -> list[float]:
        out = []
        for j in range(steps):
            point = theta if i == mid and j == mid else theta + axis[i] * v1 + axis[j] * v2
            try:
                value = float(loss_fn(point))
            except (FloatingPointError, OverflowError, ArithmeticError):
                value = math.nan
            out.append(value)
        return out

    with np.errstate(over="ignore", invalid="ignore"):
        values = np.array(ordered_map(row, list(range(steps)), workers=workers))
    flags = ~np.isfinite(values)
    if flags.any():
        logger.warning(UI_MESSAGES["warnings"]["flagged_cells"].format(int(flags.sum())))
        values[flags] = math.nan
    return LandscapeGrid(alphas=axis.copy(), betas=axis.copy(), loss=values, flags=flags, center=center)


@dataclass
class AxisCurvature:
    finite_difference: float
    parabola: float


def axis_curvatures(grid: LandscapeGrid) -> dict[str, AxisCurvature]:
    """Second derivative of the loss along each axis through the center.

    `finite_difference` is the 3-point stencil at the center; `parabola` is twice
    the leading coefficient of a least-squares quadratic over the whole axis.
    """
    if len(grid.alphas) < 3:
        raise ValidationError("curvature needs at least 3 grid steps")
    mid = len(grid.alphas) // 2
    h = float(grid.alphas[1] - grid.alphas[0])
    out = {}
    for name, line in (("alpha", grid.loss[:, mid]), ("beta", grid.loss[mid, :])):
        ok = np.isfinite(line)
        fd = (line[mid + 1] - 2.0 * line[mid] + line[mid - 1]) / (h * h)
        coeffs = np.polyfit(grid.alphas[ok], line[ok], 2) if ok.sum() >= 3 else [math.nan]
        out[name] = AxisCurvature(finite_difference=float(fd), parabola=float(2.0 * coeffs[0]))
    return out


def write_grid(path: str | Path, grid: LandscapeGrid, sidecar: dict) -> Path:
    """CSV `alpha,beta,loss,flag` plus `<stem>.json` describing how it was made."""
    path = Path(path)
    write_csv(path, GRID_COLUMNS, grid.rows())
    write_json_report(path.with_suffix(".json"), sidecar)
    return path
