"""Adaptation runs: warm-started synthetic model, one scheme, AdamW with cosine warmup."""

from app.src.adapter.base_layer import AdapterLayer
from app.src.adapter.baselines import FullLayer, vera_shared_bases
from app.src.adapter.checkpoint import save_frod_layers
from app.src.adapter.frod_layer import FrodLayer
from app.src.adapter.params import count_params
from app.src.adapter.registry import BuildContext, get_scheme_registry
from app.src.analysis.spectral import split_update, tan_alpha_proxy
from app.src.core.lab_errors import NumericalError, InvariantViolation
from app.src.decomp.hjd import hjd_decompose, JointDecomposition
from app.src.tensorio.container import TensorContainer, write_container
from app.src.tensorio.rng import SplitMix64, derive_seed
from app.src.tensorio.stack import WeightStack, CategoryStack
from app.src.tensorio.synthetic import generate_synthetic_stack
from app.src.train.config import TrainConfig
from app.src.train.model import AdaptedModel, build_model
from app.src.train.optim import AdamW
from app.src.train.schedule import scheduled_lr
from app.src.train.tasks import Dataset, make_task
from app.utils.ui_messages import UI_MESSAGES
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
import numpy as np
import logging
import json
import math
import time


logger = logging.getLogger(__name__)

WARM_START_SALT = 0x5EED
VERA_SALT = 0x5EA
PROBE_SALT = 0x9B0BE
MERGE_PROBES = 8
SIGMA_SCHEMES = ("frod", "sigma-only")
EPOCH_COLUMNS = ["epoch", "loss", "acc", "lr_sigma", "lr_S", "eval_loss", "eval_acc", "lr_other"]


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    acc: float
    eval_loss: float
    eval_acc: float
    lr_sigma: float
    lr_S: float
    lr_other: float

    def row(self) -> list:
        return [getattr(self, c) for c in EPOCH_COLUMNS]


@dataclass
class TrainReport:
    """Outcome of one run. `checkpoints` and `wall_time` stay out of the JSON."""

    config: dict
    scheme: str
    epochs: list[EpochRecord] = field(default_factory=list)
    step_lrs: dict[str, list[float]] = field(default_factory=dict)
    trainable: int = 0
    trainable_expected: int = 0
    frozen_scalars: int = 0
    merge_residual: float = 0.0
    tan_alpha: float | None = None
    rotation: list[dict] = field(default_factory=list)
    diverged: bool = False
    divergence: dict | None = None
    checkpoints: list[np.ndarray] = field(default_factory=list, repr=False)
    wall_time: float = 0.0

    @property
    def final(self) -> EpochRecord:
        return self.epochs[-1]

    def eval_accuracy_at(self, epoch: int) -> float | None:
        for record in self.epochs:
            if record.epoch == epoch:
                return record.eval_acc
        return None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "scheme": self.scheme,
            "epochs": [vars(e) for e in self.epochs],
            "step_lrs": self.step_lrs,
            "trainable": self.trainable,
            "trainable_expected": self.trainable_expected,
            "frozen_scalars": self.frozen_scalars,
            "merge_residual": self.merge_residual,
            "tan_alpha": self.tan_alpha,
            "rotation": self.rotation,
            "diverged": self.diverged,
            "divergence": self.divergence,
        }


@dataclass
class TrainOutcome:
    report: TrainReport
    model: AdaptedModel
    task: Dataset
    initial_params: np.ndarray


def _category_labels(config: TrainConfig) -> list[str]:
    return config.categories()


def _full_model(stack: WeightStack, kind: str, classes: int) -> AdaptedModel:
    layers = {
        f"{cat.label}/{i}": FullLayer(W) for cat in stack.categories for i, W in enumerate(cat.layers)
    }
    return build_model(kind, layers, classes)


def _shuffled_batches(seed: int, epoch: int, count: int, batch: int):
    order = SplitMix64(derive_seed(seed, epoch)).permutation(count)
    for start in range(0, count, batch):
        yield order[start : start + batch]


@lru_cache(maxsize=32)
def _pretrained_cached(key: str) -> WeightStack:
    config = TrainConfig.from_dict(json.loads(key))
    labels = _category_labels(config)
    stack = generate_synthetic_stack(
        derive_seed(config.seed, WARM_START_SALT),
        categories=len(labels),
        layers=config.model.layers,
        m=config.model.m,
        n=config.model.n,
        labels=labels,
    )
    o = config.optim
    if o.warm_start_epochs == 0 or o.warm_start_lr == 0:
        return stack

    warm_seed = config.seed ^ WARM_START_SALT
    task = make_task(config.task, warm_seed)
    model = _full_model(stack, config.task.kind, config.task.classes)
    opt = AdamW(model.param_refs(), {"other": o.warm_start_lr}, (o.beta1, o.beta2), o.adam_eps)
    for epoch in range(1, o.warm_start_epochs + 1):
        for idx in _shuffled_batches(warm_seed, epoch, len(task.y_train), o.batch):
            loss, grads = model.loss_and_grads(task.X_train[idx], task.y_train[idx])
            if not math.isfinite(loss):
                raise NumericalError(f"warm start diverged at epoch {epoch}")
            opt.step(grads, {"other": o.warm_start_lr})
    logger.info("warm start done: %d epoch(s), eval accuracy %.4f", o.warm_start_epochs, model.accuracy(task.X_eval, task.y_eval))
    return WeightStack(
        [
            CategoryStack(label, [model.layers[f"{label}/{i}"].merge_weights() for i in range(config.model.layers)])
            for label in labels
        ]
    )


def pretrained_stack(config: TrainConfig) -> WeightStack:
    """The frozen starting weights: full fine-tuning of a random stack on a seed-shifted task.

    Only the fields that shape the warm start take part in the cache key.
    """
    key = {
        "seed": config.seed,
        "task": vars(config.task),
        "model": vars(config.model),
        "optim": vars(config.optim),
    }
    cached = _pretrained_cached(json.dumps(key, sort_keys=True))
    return WeightStack([CategoryStack(c.label, [w.copy() for w in c.layers]) for c in cached.categories])


def build_layers(
    config: TrainConfig, stack: WeightStack, dec: JointDecomposition | None
) -> dict[str, AdapterLayer]:
    registry = get_scheme_registry()
    scheme = config.scheme
    m, n = stack.shape
    bases = vera_shared_bases(m, n, scheme.r, derive_seed(config.seed, VERA_SALT)) if scheme.name == "vera" else None
    layers = {}
    index = 0
    for cat in stack.categories:
        for i, W in enumerate(cat.layers):
            index += 1
            ctx = BuildContext(
                weight=W,
                seed=derive_seed(config.seed, index),
                r=scheme.r,
                s=scheme.s,
                decomposition=dec,
                category=cat.label,
                layer_index=i,
                vera_bases=bases,
            )
            layers[f"{cat.label}/{i}"] = registry.build(scheme.name, ctx)
    return layers


def merge_residual(model: AdaptedModel, seed: int) -> float:
    """max over layers of ||forward(X) - X W'^T|| / ||X W'^T|| on random probes."""
    worst = 0.0
    for k, layer in enumerate(model.layers.values()):
        n = layer.shape[1]
        X = SplitMix64(derive_seed(seed ^ PROBE_SALT, k)).normals(MERGE_PROBES * n).reshape(MERGE_PROBES, n)
        merged = X @ layer.merge_weights().T
        scale = float(np.linalg.norm(merged))
        diff = float(np.linalg.norm(layer.forward(X) - merged))
        worst = max(worst, diff / scale if scale > 0 else diff)
    return worst


def rotation_summary(model: AdaptedModel) -> list[dict]:
    rows = []
    for name, layer in model.layers.items():
        if isinstance(layer, FrodLayer):
            split = split_update(layer)
            rows.append({"layer": name, **split.to_dict()})
    return rows


def _save_checkpoint(directory: Path, epoch: int, model: AdaptedModel):
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"epoch{epoch}.frodtnsr"
    if all(isinstance(layer, FrodLayer) for layer in model.layers.values()):
        save_frod_layers(path, {name.replace("/", "."): layer for name, layer in model.layers.items()})
        return
    c = TensorContainer()
    for ref in model.param_refs():
        c.add(ref.key, ref.array)
    write_container(path, c)


def _base_lrs(config: TrainConfig) -> dict[str, float]:
    s = config.scheme
    return {"sigma": s.lr_sigma, "S": s.lr_S, "other": s.lr_other}


def run_training(config: TrainConfig) -> TrainOutcome:
    """Warm start, decompose when the scheme needs it, adapt, evaluate every epoch.

    A non-finite loss stops the run; the partial report carries `diverged`.
    """
    config.validate()
    started = time.perf_counter()
    task = make_task(config.task, config.seed)
    stack = pretrained_stack(config)
    registry = get_scheme_registry()
    dec = hjd_decompose(stack, config.scheme.pi, config.scheme.mode) if registry.needs_decomposition(config.scheme.name) else None
    model = build_model(config.task.kind, build_layers(config, stack, dec), config.task.classes)

    s, o = config.scheme, config.optim
    m, n = stack.shape
    expected = count_params(s.name, m, n, config.model.layers, r=s.r, s=s.s, categories=len(stack.categories))
    refs = model.param_refs()
    base_lrs = _base_lrs(config)
    opt = AdamW(refs, base_lrs, (o.beta1, o.beta2), o.adam_eps, {g: o.weight_decay for g in base_lrs})
    report = TrainReport(
        config=config.to_dict(),
        scheme=s.name,
        trainable=opt.trainable_count(),
        trainable_expected=expected.trainable,
        frozen_scalars=sum(layer.frozen_scalars() for layer in model.layers.values()),
        step_lrs={g: [] for g in sorted({ref.group for ref in refs})},
    )
    if report.trainable != report.trainable_expected:
        raise InvariantViolation(
            f"{s.name}: {report.trainable} trainable scalars, accounting says {report.trainable_expected}"
        )
    if s.name in SIGMA_SCHEMES and s.lr_sigma > 0:
        report.tan_alpha = tan_alpha_proxy(s.s if s.name != "sigma-only" else 0.0, s.lr_S, s.lr_sigma, n)

    n_train = len(task.y_train)
    total_steps = o.epochs * math.ceil(n_train / o.batch)
    ckpt_dir = Path(config.checkpoint_dir) if config.checkpoint_dir else None
    initial = model.flat_params()

    def lrs_at(step: int) -> dict[str, float]:
        return {g: scheduled_lr(o.schedule, step, total_steps, o.warmup_frac, base) for g, base in base_lrs.items()}

    def record(epoch: int, lrs: dict[str, float]):
        loss, acc = model.evaluate(task.X_train, task.y_train)
        eval_loss, eval_acc = model.evaluate(task.X_eval, task.y_eval)
        report.epochs.append(
            EpochRecord(epoch, loss, acc, eval_loss, eval_acc, lrs["sigma"], lrs["S"], lrs["other"])
        )
        report.checkpoints.append(model.flat_params())
        report.merge_residual = max(report.merge_residual, merge_residual(model, config.seed))
        if ckpt_dir is not None:
            _save_checkpoint(ckpt_dir, epoch, model)
        logger.info("epoch %d: loss %.6f acc %.4f eval_acc %.4f", epoch, loss, acc, eval_acc)
        return math.isfinite(loss) and math.isfinite(eval_loss)

    step = 0
    lrs = lrs_at(0)
    record(0, lrs)
    for epoch in range(1, o.epochs + 1):
        for idx in _shuffled_batches(config.seed, epoch, n_train, o.batch):
            lrs = lrs_at(step + 1)
            try:
                loss, grads = model.loss_and_grads(task.X_train[idx], task.y_train[idx])
                if not math.isfinite(loss):
                    raise NumericalError("non-finite loss")
                opt.step(grads, lrs)
            except NumericalError as e:
                logger.warning(UI_MESSAGES["warnings"]["divergence"].format(epoch, step))
                report.diverged = True
                report.divergence = {"epoch": epoch, "step": step, "reason": str(e)}
                report.wall_time = time.perf_counter() - started
                return TrainOutcome(report, model, task, initial)
            for g in report.step_lrs:
                report.step_lrs[g].append(lrs[g])
            step += 1
        if not record(epoch, lrs):
            logger.warning(UI_MESSAGES["warnings"]["divergence"].format(epoch, step))
            report.diverged = True
            report.divergence = {"epoch": epoch, "step": step, "reason": "non-finite evaluation loss"}
            break

    report.rotation = rotation_summary(model)
    report.wall_time = time.perf_counter() - started
    return TrainOutcome(report, model, task, initial)


def train_run(config: TrainConfig) -> TrainReport:
    return run_training(config).report
