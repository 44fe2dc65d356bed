"""Weight tensors and their deterministic lazy materialization.

Tensors are float32, row-major, little-endian. Materialization is a pure
function of (graph seed, node id, tensor role) so exports are reproducible
without a training phase.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

DTYPE_CODES = {"float32": 0}


@dataclass(frozen=True)
class TensorValue:
    role: str
    dtype: str
    dims: tuple[int, ...]
    data: bytes

    def __post_init__(self):
        if self.dtype not in DTYPE_CODES:
            raise ValueError(f"unsupported dtype {self.dtype!r}")
        n = 1
        for d in self.dims:
            n *= d
        if len(self.data) != 4 * n:
            raise ValueError(
                f"tensor {self.role!r}: data length {len(self.data)} != 4*{n}"
            )

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype="<f4").reshape(self.dims)

    @classmethod
    def from_array(cls, role: str, arr: np.ndarray) -> "TensorValue":
        arr = np.ascontiguousarray(arr, dtype="<f4")
        return cls(role=role, dtype="float32", dims=tuple(arr.shape),
                   data=arr.tobytes())


def content_hash(tv: TensorValue) -> str:
    """Content address of a tensor: dtype + dims + raw bytes."""
    h = hashlib.sha256()
    h.update(bytes([DTYPE_CODES[tv.dtype]]))
    h.update(struct.pack("<B", len(tv.dims)))
    for d in tv.dims:
        h.update(struct.pack("<I", d))
    h.update(tv.data)
    return h.hexdigest()


def _fan_in(dims: tuple[int, ...]) -> int:
    if len(dims) >= 2:
        n = 1
        for d in dims[1:]:
            n *= d
        return n
    return dims[0]


def materialize(seed: int, node_id: str, role: str, dims: tuple[int, ...]) -> TensorValue:
    """Deterministically generate a tensor for (seed, node, role).

    Values are uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], filled in
    row-major order. Running variance gets the absolute value so batch-norm
    statistics stay non-negative.
    """
    key = hashlib.sha256(
        struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF)
        + node_id.encode("utf-8") + b"\x00" + role.encode("utf-8")
    ).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(key[:8], "little")))
    bound = 1.0 / math.sqrt(_fan_in(dims))
    n = 1
    for d in dims:
        n *= d
    values = rng.uniform(-bound, bound, size=n).astype("<f4")
    if role == "running_var":
        values = np.abs(values)
    return TensorValue(role=role, dtype="float32", dims=tuple(dims),
                       data=values.reshape(dims).tobytes())
