"""Train once per seed, then probe the loss surface around the start and end points."""

from app.src.core.lab_errors import ValidationError
from app.src.landscape.directions import Direction, principal_directions, filter_normalized_random
from app.src.landscape.grid import ModelLoss, loss_grid, axis_curvatures, write_grid
from app.src.tensorio.rng import derive_seed
from app.src.train.config import TrainConfig, read_config_file, merge_dict
from app.src.train.trainer import run_training, TrainOutcome
from app.utils.constants import DEFAULT_HALF_RANGE, DEFAULT_GRID_STEPS
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np
import logging


logger = logging.getLogger(__name__)

PHASES = ("init", "trained", "both")
DIRECTION_MODES = ("auto", "pca", "filter")


@dataclass
class LandscapeConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    half_range: float = DEFAULT_HALF_RANGE
    steps: int = DEFAULT_GRID_STEPS
    phase: str = "both"
    directions: str = "auto"
    seeds: list[int] | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "LandscapeConfig":
        unknown = sorted(set(data) - {"train", "landscape"})
        if unknown:
            raise ValidationError(f"unknown key(s) in landscape config: {', '.join(unknown)}")
        probe = data.get("landscape") or {}
        allowed = {"half_range", "steps", "phase", "directions", "seeds"}
        unknown = sorted(set(probe) - allowed)
        if unknown:
            raise ValidationError(f"unknown key(s) in 'landscape': {', '.join(unknown)}")
        config = cls(train=TrainConfig.from_dict(data.get("train") or {}), **probe)
        config.validate()
        return config

    def validate(self):
        if self.phase not in PHASES:
            raise ValidationError(f"phase must be one of {PHASES}, got '{self.phase}'")
        if self.directions not in DIRECTION_MODES:
            raise ValidationError(f"directions must be one of {DIRECTION_MODES}, got '{self.directions}'")
        if self.steps < 1 or self.steps % 2 == 0:
            raise ValidationError(f"grid steps must be odd, got {self.steps}")
        if not self.half_range > 0:
            raise ValidationError(f"half_range must be > 0, got {self.half_range}")
        if self.seeds is not None and not self.seeds:
            raise ValidationError("seeds, when given, must be a non-empty list")

    def phases(self) -> list[str]:
        return ["init", "trained"] if self.phase == "both" else [self.phase]


def load_landscape_config(path: str | Path) -> LandscapeConfig:
    return LandscapeConfig.from_dict(read_config_file(path))


def _directions(
    outcome: TrainOutcome, phase: str, mode: str, theta: np.ndarray, seed: int
) -> tuple[Direction, Direction]:
    checkpoints = outcome.report.checkpoints
    use_pca = phase == "trained" and (mode == "pca" or (mode == "auto" and len(checkpoints) >= 3))
    if use_pca:
        return principal_directions(checkpoints)
    if mode == "pca":
        raise ValidationError("principal directions are only defined for the trained phase")
    shapes = [shape for _, shape in outcome.model.block_shapes()]
    return (
        filter_normalized_random(theta, derive_seed(seed, 1), shapes),
        filter_normalized_random(theta, derive_seed(seed, 2), shapes),
    )


def landscape_run(config: LandscapeConfig, out_dir: str | Path, workers: int | None = None) -> dict:
    """Write `grid_<phase>_seed<k>.csv` (+ JSON sidecar) for every seed and phase."""
    config.validate()
    out_dir = Path(out_dir)
    seeds = config.seeds if config.seeds is not None else [config.train.seed]
    grids = []
    for seed in seeds:
        train = TrainConfig.from_dict(merge_dict(config.train.to_dict(), {"seed": seed}))
        outcome = run_training(train)
        if outcome.report.diverged:
            raise ValidationError(f"seed {seed}: training diverged, no landscape to probe")
        task = outcome.task
        evaluator = ModelLoss(outcome.model, task.X_eval, task.y_eval)
        for phase in config.phases():
            theta = outcome.initial_params if phase == "init" else outcome.model.flat_params()
            d1, d2 = _directions(outcome, phase, config.directions, theta, seed)
            grid = loss_grid(evaluator, theta, d1, d2, config.half_range, config.steps, workers=workers, center=phase)
            direct = evaluator(theta)
            curv = axis_curvatures(grid) if config.steps >= 3 else {}
            name = f"grid_{phase}_seed{seed}.csv"
            sidecar = {
                "phase": phase,
                "seed": seed,
                "scheme": train.scheme.name,
                "half_range": config.half_range,
                "steps": config.steps,
                "directions": [d1.describe(), d2.describe()],
                "center_loss": grid.center_loss,
                "direct_eval_loss": direct,
                "flagged_cells": int(grid.flags.sum()),
                "curvature": {k: vars(v) for k, v in curv.items()},
            }
            write_grid(out_dir / name, grid, sidecar)
            logger.info("landscape %s: center loss %.6f", name, grid.center_loss)
            grids.append({"file": name, "phase": phase, "seed": seed, "center_loss": grid.center_loss, "flagged_cells": int(grid.flags.sum())})
    return {"grids": grids, "steps": config.steps, "half_range": config.half_range}
