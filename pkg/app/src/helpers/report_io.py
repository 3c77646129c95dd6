"""Atomic, byte-stable writers for JSON reports and CSV tables."""

from pathlib import Path
from typing import Any, Iterable, Sequence
import numpy as np
import tempfile
import json
import csv
import io
import os


def _to_builtin(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        # JSON has no NaN/inf; keep the value readable and the file valid
        return repr(obj)
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(_to_builtin(report), sort_keys=True, indent=2) + "\n"


def atomic_write_bytes(path: str | Path, data: bytes):
    """Write `data` to `path` through a temp file in the same directory + os.replace."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_report(path: str | Path, report: dict) -> Path:
    atomic_write_bytes(path, dumps_report(report).encode("utf-8"))
    return Path(path)


def format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
    return Path(path)


def load_report(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
