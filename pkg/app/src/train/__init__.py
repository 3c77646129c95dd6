from .config import TrainConfig, TaskSpec, ModelSpec, SchemeSpec, OptimSpec, load_train_config, read_config_file
from .tasks import Dataset, make_task
from .schedule import cosine_lr, scheduled_lr
from .optim import AdamState, AdamW, ParamRef, adamw_step
from .model import AdaptedModel, MlpModel, AttentionModel, build_model, softmax_cross_entropy
from .trainer import TrainReport, TrainOutcome, EpochRecord, EPOCH_COLUMNS, run_training, train_run, pretrained_stack
from .sweep import (
    GridPoint,
    SweepResult,
    SWEEP_COLUMNS,
    ablation_sweep,
    cartesian_grid,
    explicit_grid,
    density_lr_grid,
    sweep_csv_rows,
)

__all__ = [
    "TrainConfig",
    "TaskSpec",
    "ModelSpec",
    "SchemeSpec",
    "OptimSpec",
    "load_train_config",
    "read_config_file",
    "Dataset",
    "make_task",
    "cosine_lr",
    "scheduled_lr",
    "AdamState",
    "AdamW",
    "ParamRef",
    "adamw_step",
    "AdaptedModel",
    "MlpModel",
    "AttentionModel",
    "build_model",
    "softmax_cross_entropy",
    "TrainReport",
    "TrainOutcome",
    "EpochRecord",
    "EPOCH_COLUMNS",
    "run_training",
    "train_run",
    "pretrained_stack",
    "GridPoint",
    "SweepResult",
    "SWEEP_COLUMNS",
    "ablation_sweep",
    "cartesian_grid",
    "explicit_grid",
    "density_lr_grid",
    "sweep_csv_rows",
]
