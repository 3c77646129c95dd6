from app.src.core.lab_errors import ValidationError
from app.utils.constants import (
    SCHEMES,
    TASK_KINDS,
    DECOMP_MODES,
    DEFAULT_PI,
    DEFAULT_MODE,
    BLOB_RADIUS,
)
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any
import yaml
import json


SCHEDULES = ("cosine", "constant")


def _from_mapping(cls, data: dict | None, where: str):
    data = data or {}
    if not isinstance(data, dict):
        raise ValidationError(f"'{where}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"unknown key(s) in '{where}': {', '.join(unknown)}")
    return cls(**data)


@dataclass
class TaskSpec:
    kind: str = "blobs"
    classes: int = 8
    input_dim: int = 32
    samples: int = 4096
    seq_len: int = 6
    radius: float = BLOB_RADIUS


@dataclass
class ModelSpec:
    layers: int = 4
    m: int = 32
    n: int = 32
    categories: list[str] | None = None


@dataclass
class SchemeSpec:
    name: str = "frod"
    s: float = 0.02
    r: int = 4
    lr_sigma: float = 1e-3
    lr_S: float = 1e-4
    lr_other: float = 1e-3
    pi: float = DEFAULT_PI
    mode: str = DEFAULT_MODE


@dataclass
class OptimSpec:
    epochs: int = 10
    batch: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    warmup_frac: float = 0.1
    schedule: str = "cosine"
    warm_start_epochs: int = 5
    warm_start_lr: float = 1e-2


@dataclass
class TrainConfig:
    seed: int = 0
    task: TaskSpec = field(default_factory=TaskSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    scheme: SchemeSpec = field(default_factory=SchemeSpec)
    optim: OptimSpec = field(default_factory=OptimSpec)
    checkpoint_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        if not isinstance(data, dict):
            raise ValidationError("train config must be an object")
        known = {"seed", "task", "model", "scheme", "optim", "checkpoint_dir"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown key(s) in train config: {', '.join(unknown)}")
        try:
            config = cls(
                seed=int(data.get("seed", 0)),
                task=_from_mapping(TaskSpec, data.get("task"), "task"),
                model=_from_mapping(ModelSpec, data.get("model"), "model"),
                scheme=_from_mapping(SchemeSpec, data.get("scheme"), "scheme"),
                optim=_from_mapping(OptimSpec, data.get("optim"), "optim"),
                checkpoint_dir=data.get("checkpoint_dir"),
            )
        except (TypeError, ValueError) as e:
            raise ValidationError(f"invalid train config: {e}") from e
        config.validate()
        return config

    def to_dict(self) -> dict:
        return asdict(self)

    def categories(self) -> list[str]:
        if self.model.categories:
            return list(self.model.categories)
        return ["q", "k", "v", "o"] if self.task.kind == "tiny-attention" else ["mlp"]

    def validate(self):
        t, m, s, o = self.task, self.model, self.scheme, self.optim
        if t.kind not in TASK_KINDS:
            raise ValidationError(f"task.kind must be one of {TASK_KINDS}, got '{t.kind}'")
        if t.classes < 2:
            raise ValidationError(f"task.classes must be >= 2, got {t.classes}")
        if t.samples < t.classes:
            raise ValidationError(f"task.samples ({t.samples}) must be >= task.classes ({t.classes})")
        if t.input_dim < 1 or t.seq_len < 1 or t.radius <= 0:
            raise ValidationError("task.input_dim, task.seq_len and task.radius must be positive")
        if m.layers < 1:
            raise ValidationError(f"model.layers must be >= 1, got {m.layers}")
        if not (m.m == m.n == t.input_dim):
            raise ValidationError(
                f"bias-free square stack needs model.m == model.n == task.input_dim, got {m.m}, {m.n}, {t.input_dim}"
            )
        if t.classes > m.m:
            raise ValidationError(f"task.classes ({t.classes}) exceeds the layer width {m.m}")
        if t.kind == "tiny-attention" and self.model.categories and sorted(self.model.categories) != ["k", "o", "q", "v"]:
            raise ValidationError("tiny-attention categories are fixed to q, k, v, o")
        if s.name not in SCHEMES:
            raise ValidationError(f"scheme.name must be one of {SCHEMES}, got '{s.name}'")
        if min(s.lr_sigma, s.lr_S, s.lr_other) < 0:
            raise ValidationError("learning rates must be >= 0")
        if not 0.0 <= s.s <= 1.0:
            raise ValidationError(f"scheme.s must lie in [0, 1], got {s.s}")
        if s.name in ("lora", "pissa", "vera") and not 1 <= s.r <= min(m.m, m.n):
            raise ValidationError(f"scheme.r must lie in [1, {min(m.m, m.n)}], got {s.r}")
        if s.pi <= 0 or s.mode not in DECOMP_MODES:
            raise ValidationError(f"scheme.pi must be > 0 and scheme.mode one of {DECOMP_MODES}")
        if o.epochs < 1 or o.batch < 1:
            raise ValidationError("optim.epochs and optim.batch must be >= 1")
        if not 0.0 <= o.warmup_frac < 1.0:
            raise ValidationError(f"optim.warmup_frac must lie in [0, 1), got {o.warmup_frac}")
        if o.schedule not in SCHEDULES:
            raise ValidationError(f"optim.schedule must be one of {SCHEDULES}")
        if not (0 <= o.beta1 < 1 and 0 <= o.beta2 < 1) or o.adam_eps <= 0 or o.weight_decay < 0:
            raise ValidationError("invalid AdamW hyperparameters")
        if o.warm_start_epochs < 0 or o.warm_start_lr < 0:
            raise ValidationError("warm start epochs and learning rate must be >= 0")


def read_config_file(path: str | Path) -> dict:
    """Parse a JSON config, or YAML when the suffix is .yaml/.yml."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ValidationError(f"config file '{path}' not found") from e
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ValidationError(f"config file '{path}' is not valid: {e}") from e
    if not isinstance(data, dict):
        raise ValidationError(f"config file '{path}' must hold an object")
    return data


def load_train_config(path: str | Path) -> TrainConfig:
    return TrainConfig.from_dict(read_config_file(path))


def merge_dict(base: dict, override: dict[str, Any]) -> dict:
    out = json.loads(json.dumps(base))
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_dict(out[key], value)
        else:
            out[key] = value
    return out
