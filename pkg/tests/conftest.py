import io

import pytest
from rich.console import Console

from app.src.core.ui import LabUI
from app.src.decomp import hjd_decompose
from app.src.tensorio import generate_synthetic_stack
from app.src.train import TrainConfig
from tests.helpers import tiny_train_dict


@pytest.fixture
def quiet_ui() -> LabUI:
    """UI writing into in-memory buffers so tests can inspect what was printed."""
    return LabUI(
        Console(file=io.StringIO(), width=100),
        err_console=Console(file=io.StringIO(), width=100),
    )


@pytest.fixture
def small_stack():
    return generate_synthetic_stack(seed=7, categories=2, layers=4, m=16, n=8)


@pytest.fixture
def small_decomposition(small_stack):
    return hjd_decompose(small_stack, pi=1e-3, mode="blockwise")


@pytest.fixture
def tiny_config() -> TrainConfig:
    return TrainConfig.from_dict(tiny_train_dict())
