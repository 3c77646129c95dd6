from app.src.analysis.spectral import tan_alpha_proxy, in_rotation_band
from app.src.core.lab_errors import ValidationError
from app.src.helpers.threads import ordered_map
from app.src.train.config import TrainConfig, merge_dict
from app.src.train.trainer import train_run
from app.utils.constants import ACC_EPOCHS
from dataclasses import dataclass, field
import numpy as np
import itertools
import logging


logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "grid_index",
    "seed",
    "variant",
    "s",
    "lr_S",
    "lr_sigma",
    *[f"acc_e{e}" for e in ACC_EPOCHS],
    "final_loss",
    "tan_alpha",
    "in_band",
    "diverged",
]

# joint grid plus the single-rate ablations of the density/learning-rate study
PRESET_DENSITIES = (0.01, 0.02, 0.1)
PRESET_LR_S = (1e-5, 5e-5, 1e-4, 5e-4)
PRESET_LR_SIGMA = (1e-4, 5e-4, 1e-3, 5e-3)


@dataclass(frozen=True)
class GridPoint:
    s: float
    lr_S: float
    lr_sigma: float

    @property
    def variant(self) -> str:
        if self.lr_sigma == 0:
            return "s-only"
        if self.lr_S == 0 or self.s == 0:
            return "sigma-only"
        return "joint"

    @property
    def scheme(self) -> str:
        return {"joint": "frod", "sigma-only": "sigma-only", "s-only": "s-only"}[self.variant]


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)
    medians: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "medians": self.medians}


def _checked(points: list[GridPoint]) -> list[GridPoint]:
    for p in points:
        if p.lr_S == 0 and p.lr_sigma == 0:
            raise ValidationError(f"grid point s={p.s} has lr_S = lr_sigma = 0: nothing would train")
        if p.lr_sigma == 0 and p.s == 0:
            raise ValidationError("grid point with s = 0 and lr_sigma = 0 has no trainable entries")
        if min(p.s, p.lr_S, p.lr_sigma) < 0:
            raise ValidationError(f"negative value in grid point {p}")
    return points


def cartesian_grid(s: list[float], lr_S: list[float], lr_sigma: list[float]) -> list[GridPoint]:
    return _checked([GridPoint(float(a), float(b), float(c)) for a, b, c in itertools.product(s, lr_S, lr_sigma)])


def explicit_grid(points: list[dict]) -> list[GridPoint]:
    """Grid from a list of {s, lr_S, lr_sigma} mappings, kept in the given order."""
    try:
        return _checked([GridPoint(float(p["s"]), float(p["lr_S"]), float(p["lr_sigma"])) for p in points])
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"grid points need numeric s, lr_S and lr_sigma: {e}") from e


def density_lr_grid() -> list[GridPoint]:
    joint = cartesian_grid(list(PRESET_DENSITIES), list(PRESET_LR_S), list(PRESET_LR_SIGMA))
    sigma_only = [GridPoint(0.0, 0.0, lr) for lr in PRESET_LR_SIGMA]
    s_only = [GridPoint(s, lr, 0.0) for s in PRESET_DENSITIES for lr in PRESET_LR_S]
    return joint + sigma_only + s_only


def point_config(base: TrainConfig, point: GridPoint, seed: int) -> TrainConfig:
    override = {
        "seed": seed,
        "scheme": {"name": point.scheme, "s": point.s, "lr_S": point.lr_S, "lr_sigma": point.lr_sigma},
    }
    data = merge_dict(base.to_dict(), override)
    data["checkpoint_dir"] = None
    return TrainConfig.from_dict(data)


def _run_point(job: tuple[int, GridPoint, int, TrainConfig]) -> dict:
    index, point, seed, config = job
    report = train_run(config)
    n = config.model.n
    tan = tan_alpha_proxy(point.s, point.lr_S, point.lr_sigma, n) if point.lr_sigma > 0 else None
    row = {
        "grid_index": index,
        "seed": seed,
        "variant": point.variant,
        "s": point.s,
        "lr_S": point.lr_S,
        "lr_sigma": point.lr_sigma,
        "final_loss": report.final.loss,
        "tan_alpha": tan,
        "in_band": in_rotation_band(tan),
        "diverged": report.diverged,
    }
    for e in ACC_EPOCHS:
        row[f"acc_e{e}"] = report.eval_accuracy_at(e)
    return row


def _median_block(index: int, rows: list[dict]) -> dict:
    first = rows[0]
    block = {k: first[k] for k in ("grid_index", "variant", "s", "lr_S", "lr_sigma", "tan_alpha", "in_band")}
    block["seeds"] = len(rows)
    for key in [f"acc_e{e}" for e in ACC_EPOCHS] + ["final_loss"]:
        values = [r[key] for r in rows if r[key] is not None]
        if not values:
            block[key] = block[f"{key}_min"] = block[f"{key}_max"] = None
            continue
        block[key] = float(np.median(values))
        block[f"{key}_min"] = float(np.min(values))
        block[f"{key}_max"] = float(np.max(values))
    return block


def ablation_sweep(
    base: TrainConfig,
    grid: list[GridPoint],
    seeds: list[int],
    workers: int | None = None,
) -> SweepResult:
    """Train every (grid point, seed) pair and aggregate medians across seeds.

    Rows come back in grid order, seed-minor, whatever the thread count.
    """
    if not grid:
        raise ValidationError("empty sweep grid")
    if not seeds:
        raise ValidationError("a sweep needs at least one seed")
    jobs = [(i, p, seed, point_config(base, p, seed)) for i, p in enumerate(grid) for seed in seeds]
    logger.info("sweep: %d configuration(s) x %d seed(s)", len(grid), len(seeds))
    rows = ordered_map(_run_point, jobs, workers=workers)
    result = SweepResult(rows=rows)
    for i in range(len(grid)):
        result.medians.append(_median_block(i, [r for r in rows if r["grid_index"] == i]))
    return result


def sweep_csv_rows(result: SweepResult) -> list[list]:
    """Per-seed rows followed by one `median` row per configuration."""
    out = [[row[c] for c in SWEEP_COLUMNS] for row in result.rows]
    for block in result.medians:
        med = dict(block, seed="median", diverged="")
        out.append([med.get(c, "") for c in SWEEP_COLUMNS])
    return out
