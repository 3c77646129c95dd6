import json
import math
from pathlib import Path

import numpy as np
import pytest

from app.src.core.exception_handler import CommandExceptionHandler, CommandResult
from app.src.core.lab_errors import BadMagicError, DivergenceError, ValidationError
from app.src.helpers.report_io import dumps_report, format_cell, write_csv
from app.src.helpers.threads import ordered_map, worker_count
from app.src.helpers.valid_dir import require_output_path, validate_output_path
from app.src.train import AdamState, adamw_step


class TestReportIo:
    def test_cells(self):
        assert format_cell(True) == "1" and format_cell(False) == "0"
        assert format_cell(None) == ""
        assert format_cell(0.1) == "0.1"

    def test_non_finite_values_stay_valid_json(self):
        data = json.loads(dumps_report({"b": math.nan, "a": [math.inf]}))
        assert data == {"a": ["inf"], "b": "nan"}

    def test_keys_are_sorted(self):
        assert dumps_report({"b": 1, "a": 2}).index('"a"') < dumps_report({"b": 1, "a": 2}).index('"b"')

    def test_csv_creates_parent(self, tmp_path):
        path = write_csv(tmp_path / "deep" / "t.csv", ["x", "ok"], [[1.5, True]])
        assert path.read_text() == "x,ok\n1.5,1\n"


class TestPaths:
    def test_empty_path_rejected(self):
        assert not validate_output_path("")
        with pytest.raises(ValidationError):
            require_output_path("")

    def test_nul_byte_rejected(self):
        assert not validate_output_path("bad\0name.json")

    def test_plain_path(self, tmp_path):
        assert require_output_path(str(tmp_path / "r.json")).name == "r.json"


class TestThreads:
    def test_worker_count_from_environment(self, monkeypatch):
        monkeypatch.setenv("FROD_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("FROD_THREADS", "0")
        assert worker_count() == 1
        monkeypatch.setenv("FROD_THREADS", "many")
        assert worker_count() >= 1

    def test_ordered_map_keeps_input_order(self):
        items = list(range(50))
        assert ordered_map(lambda x: x * x, items, workers=8) == [x * x for x in items]
        assert ordered_map(lambda x: x, [], workers=4) == []


class TestExceptionHandler:
    @pytest.mark.parametrize(
        "error, code",
        [
            (ValidationError("bad flag"), 1),
            (DivergenceError("nan loss"), 2),
            (BadMagicError("not a container"), 3),
            (FileNotFoundError("missing"), 3),
            (RuntimeError("boom"), 2),
        ],
    )
    def test_exit_codes(self, quiet_ui, error, code):
        def operation():
            raise error

        result = CommandExceptionHandler.handle_command(operation, quiet_ui)
        assert result.exit_code == code
        assert not result.ok

    def test_optimizer_shape_mismatch_is_a_validation_failure(self, quiet_ui):
        theta = np.zeros(3)

        def operation():
            adamw_step(AdamState.zeros_like(theta), theta, np.zeros(4), lr=0.1)

        assert CommandExceptionHandler.handle_command(operation, quiet_ui).exit_code == 1

    def test_success_passes_through(self, quiet_ui):
        result = CommandExceptionHandler.handle_command(lambda: CommandResult(0, "fine"), quiet_ui)
        assert result.ok and result.summary == "fine"

    def test_propagate_reraises(self, quiet_ui):
        def operation():
            raise ValidationError("bad")

        with pytest.raises(ValidationError):
            CommandExceptionHandler.handle_command(operation, quiet_ui, propagate=True)


class TestSetupScript:
    def test_shebang_matches_syntax(self):
        script = (Path(__file__).resolve().parent.parent / "setup.sh").read_text()
        first, body = script.split("\n", 1)
        if "[[" in body:
            assert first == "#!/bin/bash"
        assert "echo \"\\n" not in body
