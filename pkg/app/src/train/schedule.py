from app.src.core.lab_errors import ValidationError
import math


def cosine_lr(step: int, total_steps: int, warmup_frac: float, base_lr: float) -> float:
    """Linear warmup over ceil(warmup_frac * total) steps, then half-cosine decay to 0."""
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside [0, {total_steps}]")
    warmup = math.ceil(warmup_frac * total_steps)
    if step < warmup:
        return base_lr * step / warmup
    if total_steps == warmup:
        return base_lr
    progress = (step - warmup) / (total_steps - warmup)
    return 0.5 * base_lr * (1.0 + math.cos(math.pi * progress))


def scheduled_lr(schedule: str, step: int, total_steps: int, warmup_frac: float, base_lr: float) -> float:
    if schedule == "constant":
        if not 0 <= step <= total_steps:
            raise ValidationError(f"step {step} outside [0, {total_steps}]")
        return base_lr
    return cosine_lr(step, total_steps, warmup_frac, base_lr)
