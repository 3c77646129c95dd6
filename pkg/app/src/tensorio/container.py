"""FRODTNSR binary container: magic, version, JSON header, aligned payload.

Layout (all integers little-endian):

    0..7     magic b"FRODTNSR"
    8..11    u32 version
    12..19   u64 header length H
    20..20+H UTF-8 JSON {"tensors":[{"name","dtype","shape","offset"}]}
    payload  row-major scalars, each tensor starting on an 8-byte boundary
"""

from app.src.core.lab_errors import (
    ValidationError,
    DuplicateNameError,
    ShapeMismatchError,
    BadMagicError,
    UnsupportedVersionError,
    TruncatedPayloadError,
    StorageError,
)
from app.src.helpers.report_io import atomic_write_bytes
from app.utils.constants import (
    CONTAINER_MAGIC,
    CONTAINER_VERSION,
    CONTAINER_ALIGN,
    MAX_TENSOR_NAME_BYTES,
    DTYPES,
)
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator
import numpy as np
import struct
import json


_PREFIX = struct.Struct("<8sIQ")


@dataclass
class NamedTensor:
    name: str
    data: np.ndarray
    dtype: str = "f64"

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(int(d) for d in self.data.shape)

    @classmethod
    def from_flat(cls, name: str, dtype: str, shape: list[int], flat: np.ndarray) -> "NamedTensor":
        if int(np.prod(shape, dtype=np.int64)) != flat.size:
            raise ShapeMismatchError(
                f"tensor '{name}': shape {list(shape)} does not match data length {flat.size}"
            )
        return cls(name=name, data=flat.reshape(shape), dtype=dtype)

    def validate(self):
        if not self.name:
            raise ValidationError("tensor name must be nonempty")
        if len(self.name.encode("utf-8")) > MAX_TENSOR_NAME_BYTES:
            raise ValidationError(f"tensor name longer than {MAX_TENSOR_NAME_BYTES} bytes: '{self.name[:32]}...'")
        if self.dtype not in DTYPES:
            raise ValidationError(f"tensor '{self.name}': unsupported dtype '{self.dtype}'")
        if any(d <= 0 for d in self.shape):
            raise ShapeMismatchError(f"tensor '{self.name}': shape entries must be positive, got {list(self.shape)}")

    def payload(self) -> bytes:
        return np.ascontiguousarray(self.data, dtype=DTYPES[self.dtype]).tobytes(order="C")


@dataclass
class TensorContainer:
    tensors: list[NamedTensor] = field(default_factory=list)
    version: int = CONTAINER_VERSION

    def add(self, name: str, data, dtype: str = "f64") -> "TensorContainer":
        self.tensors.append(NamedTensor(name=name, data=np.asarray(data, dtype=np.float64 if dtype == "f64" else np.float32), dtype=dtype))
        return self

    def names(self) -> list[str]:
        return [t.name for t in self.tensors]

    def get(self, name: str) -> np.ndarray:
        for t in self.tensors:
            if t.name == name:
                return t.data
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(t.name == name for t in self.tensors)

    def __iter__(self) -> Iterator[NamedTensor]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def validate(self):
        seen = set()
        for t in self.tensors:
            t.validate()
            if t.name in seen:
                raise DuplicateNameError(f"duplicate tensor name '{t.name}'")
            seen.add(t.name)


def _pad(size: int) -> int:
    return (-size) % CONTAINER_ALIGN


def encode_container(c: TensorContainer) -> bytes:
    c.validate()
    entries = []
    chunks = []
    offset = 0
    for t in c.tensors:
        raw = t.payload()
        entries.append({"name": t.name, "dtype": t.dtype, "shape": list(t.shape), "offset": offset})
        chunks.append(raw)
        pad = _pad(len(raw))
        if pad:
            chunks.append(b"\x00" * pad)
        offset += len(raw) + pad
    header = json.dumps({"tensors": entries}, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return _PREFIX.pack(CONTAINER_MAGIC, c.version, len(header)) + header + b"".join(chunks)


def decode_container(blob: bytes) -> TensorContainer:
    if len(blob) < _PREFIX.size:
        raise TruncatedPayloadError(f"file shorter than the {_PREFIX.size}-byte prefix")
    magic, version, header_len = _PREFIX.unpack_from(blob, 0)
    if magic != CONTAINER_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != CONTAINER_VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    start = _PREFIX.size
    if len(blob) < start + header_len:
        raise TruncatedPayloadError("header shorter than declared length")
    try:
        header = json.loads(blob[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise StorageError(f"malformed container header: {e}") from e

    payload = memoryview(blob)[start + header_len :]
    container = TensorContainer(version=version)
    for entry in header.get("tensors", []):
        dtype = entry["dtype"]
        if dtype not in DTYPES:
            raise StorageError(f"tensor '{entry['name']}': unsupported dtype '{dtype}'")
        shape = [int(d) for d in entry["shape"]]
        np_dtype = np.dtype(DTYPES[dtype])
        count = int(np.prod(shape, dtype=np.int64))
        begin = int(entry["offset"])
        end = begin + count * np_dtype.itemsize
        if end > len(payload):
            raise TruncatedPayloadError(
                f"tensor '{entry['name']}' needs payload bytes [{begin}, {end}) but only {len(payload)} present"
            )
        flat = np.frombuffer(payload[begin:end], dtype=np_dtype).copy()
        container.tensors.append(NamedTensor.from_flat(entry["name"], dtype, shape, flat))
    container.validate()
    return container


def write_container(path: str | Path, c: TensorContainer):
    """Serialize `c` to `path` atomically; the file is fsynced before return."""
    atomic_write_bytes(path, encode_container(c))


def read_container(path: str | Path) -> TensorContainer:
    with open(path, "rb") as f:
        blob = f.read()
    return decode_container(blob)
