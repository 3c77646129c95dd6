from .directions import Direction, principal_directions, filter_normalized_random, PROVENANCES
from .grid import (
    LandscapeGrid,
    ModelLoss,
    AxisCurvature,
    loss_grid,
    grid_axis,
    axis_curvatures,
    write_grid,
    GRID_COLUMNS,
)
from .probe import LandscapeConfig, landscape_run, load_landscape_config

__all__ = [
    "Direction",
    "principal_directions",
    "filter_normalized_random",
    "PROVENANCES",
    "LandscapeGrid",
    "ModelLoss",
    "AxisCurvature",
    "loss_grid",
    "grid_axis",
    "axis_curvatures",
    "write_grid",
    "GRID_COLUMNS",
    "LandscapeConfig",
    "landscape_run",
    "load_landscape_config",
]
