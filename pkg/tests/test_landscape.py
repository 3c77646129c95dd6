import json
import logging
import math

import numpy as np
import pytest

from app.src.core.lab_errors import ShapeMismatchError, ValidationError
from app.src.landscape import (
    Direction,
    LandscapeConfig,
    ModelLoss,
    axis_curvatures,
    filter_normalized_random,
    grid_axis,
    landscape_run,
    loss_grid,
    principal_directions,
    write_grid,
)
from app.src.train import run_training
from tests.helpers import tiny_train_dict


def _half_square(theta: np.ndarray) -> float:
    return 0.5 * float(theta @ theta)


E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])


class TestGridAxis:
    def test_symmetric_axis(self):
        assert np.allclose(grid_axis(1.0, 5), [-1.0, -0.5, 0.0, 0.5, 1.0])
        assert np.array_equal(grid_axis(1.0, 1), [0.0])

    def test_even_steps_rejected(self):
        with pytest.raises(ValidationError):
            grid_axis(1.0, 4)
        with pytest.raises(ValidationError):
            grid_axis(0.0, 3)


class TestLossGrid:
    def test_quadratic_bowl(self):
        grid = loss_grid(_half_square, np.zeros(2), E1, E2, half_range=1.0, steps=5, workers=1)
        a, b = np.meshgrid(grid.alphas, grid.betas, indexing="ij")
        assert np.allclose(grid.loss, 0.5 * (a**2 + b**2))
        assert not grid.flags.any()
        curv = axis_curvatures(grid)
        for axis in ("alpha", "beta"):
            assert curv[axis].finite_difference == pytest.approx(1.0)
            assert curv[axis].parabola == pytest.approx(1.0)

    def test_center_cell_evaluates_theta_itself(self):
        theta = np.array([0.3, -0.2])
        loss = lambda t: math.sin(t[0]) * math.exp(t[1])
        grid = loss_grid(loss, theta, E1, E2, half_range=0.1, steps=3, workers=1)
        assert grid.center_loss == loss(theta)

    def test_thread_count_does_not_change_values(self):
        theta = np.array([0.3, -0.2])
        loss = lambda t: math.cos(t[0] * t[1]) + t[0] ** 3
        serial = loss_grid(loss, theta, E1, E2, half_range=0.5, steps=7, workers=1)
        parallel = loss_grid(loss, theta, E1, E2, half_range=0.5, steps=7, workers=4)
        assert np.array_equal(serial.loss, parallel.loss)

    def test_non_finite_cells_are_flagged(self, caplog):
        loss = lambda t: math.inf if t[0] > 0.9 else _half_square(t)
        with caplog.at_level(logging.WARNING):
            grid = loss_grid(loss, np.zeros(2), E1, E2, half_range=1.0, steps=3, workers=1)
        assert int(grid.flags.sum()) == 3
        assert np.all(grid.flags[2]) and np.all(np.isnan(grid.loss[2]))
        assert np.isfinite(grid.center_loss)

    def test_direction_shape_checked(self):
        with pytest.raises(ShapeMismatchError):
            loss_grid(_half_square, np.zeros(2), np.ones(3), E2, steps=3)

    def test_rows_and_files(self, tmp_path):
        grid = loss_grid(_half_square, np.zeros(2), Direction(E1, "pca-1"), E2, half_range=1.0, steps=3, workers=1)
        rows = grid.rows()
        assert len(rows) == 9 and rows[4] == [0.0, 0.0, 0.0, False]
        path = write_grid(tmp_path / "grid.csv", grid, {"steps": 3})
        assert path.read_text().splitlines()[0] == "alpha,beta,loss,flag"
        assert json.loads((tmp_path / "grid.json").read_text()) == {"steps": 3}


class TestDirections:
    def test_rank_one_trajectory_gets_a_completion(self):
        checkpoints = [np.array([0.0, 0.0, 0.0]), np.array([1.0, 1.0, 0.0]), np.array([2.0, 2.0, 0.0])]
        d1, d2 = principal_directions(checkpoints)
        r = 1.0 / math.sqrt(2.0)
        assert np.allclose(np.abs(d1.vector), [r, r, 0.0])
        assert d1.explained_variance == pytest.approx(1.0)
        assert d2.provenance == "pca-2-completion"
        assert np.allclose(d2.vector, [0.0, 0.0, 1.0])

    def test_two_dimensional_trajectory(self):
        checkpoints = [np.array([0.0, 0.0, 0.0]), np.array([3.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([3.0, 1.0, 0.0])]
        d1, d2 = principal_directions(checkpoints)
        assert d2.provenance == "pca-2"
        assert np.allclose(np.abs(d1.vector), [1.0, 0.0, 0.0])
        assert np.allclose(np.abs(d2.vector), [0.0, 1.0, 0.0])
        assert d1.vector @ d2.vector == pytest.approx(0.0, abs=1e-12)
        assert d1.explained_variance == pytest.approx(0.9)

    def test_identical_checkpoints_rejected(self):
        with pytest.raises(ValidationError, match="zero-variance"):
            principal_directions([np.ones(4)] * 3)

    def test_needs_three_checkpoints(self):
        with pytest.raises(ValidationError):
            principal_directions([np.zeros(3), np.ones(3)])

    def test_filter_normalization(self, caplog):
        theta = np.array([3.0, 4.0, 0.0, 0.0, 1.0])
        with caplog.at_level(logging.WARNING):
            d = filter_normalized_random(theta, seed=2, shapes=[(2,), (2,), (1, 1)])
        assert np.linalg.norm(d.vector[:2]) == pytest.approx(5.0)
        assert np.array_equal(d.vector[2:4], [0.0, 0.0])
        assert abs(d.vector[4]) == pytest.approx(1.0)
        assert d.describe()["normalization"] == "filter"
        assert np.array_equal(filter_normalized_random(theta, 2, [(2,), (2,), (1, 1)]).vector, d.vector)

    def test_filter_shapes_must_cover_theta(self):
        with pytest.raises(ShapeMismatchError):
            filter_normalized_random(np.ones(4), seed=0, shapes=[(3,)])


class TestModelProbe:
    def test_model_loss_leaves_the_model_alone(self):
        outcome = run_training(LandscapeConfig.from_dict({"train": tiny_train_dict()}).train)
        theta = outcome.model.flat_params()
        evaluator = ModelLoss(outcome.model, outcome.task.X_eval, outcome.task.y_eval)
        assert evaluator(theta) == pytest.approx(outcome.report.final.eval_loss)
        evaluator(theta + 1.0)
        assert np.array_equal(outcome.model.flat_params(), theta)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            LandscapeConfig.from_dict({"landscape": {"steps": 4}})
        with pytest.raises(ValidationError):
            LandscapeConfig.from_dict({"landscape": {"phase": "midway"}})
        with pytest.raises(ValidationError):
            LandscapeConfig.from_dict({"probe": {}})

    def test_small_run_writes_both_phases(self, tmp_path):
        config = LandscapeConfig.from_dict(
            {
                "train": tiny_train_dict(optim={"epochs": 3}),
                "landscape": {"half_range": 0.5, "steps": 3, "phase": "both"},
            }
        )
        result = landscape_run(config, tmp_path, workers=2)
        assert [g["file"] for g in result["grids"]] == ["grid_init_seed0.csv", "grid_trained_seed0.csv"]
        for phase in ("init", "trained"):
            lines = (tmp_path / f"grid_{phase}_seed0.csv").read_text().splitlines()
            assert len(lines) == 1 + 9
            sidecar = json.loads((tmp_path / f"grid_{phase}_seed0.json").read_text())
            assert sidecar["center_loss"] == pytest.approx(sidecar["direct_eval_loss"], rel=1e-12)
            assert sidecar["flagged_cells"] == 0
        trained = json.loads((tmp_path / "grid_trained_seed0.json").read_text())
        init = json.loads((tmp_path / "grid_init_seed0.json").read_text())
        assert trained["directions"][0]["provenance"] == "pca-1"
        assert init["directions"][0]["provenance"] == "filter-random"
