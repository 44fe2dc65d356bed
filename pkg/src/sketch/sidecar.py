"""Binary weight sidecar format (.weights).

Layout, all integers little-endian:
    magic "SKWT" | u32 version=1 | u32 entry count
    per entry: u16 name length | name utf-8 | u8 dtype code (0=float32)
               | u8 ndim | ndim x u32 dims | raw row-major data
"""
from __future__ import annotations

import struct

from .weights import DTYPE_CODES, TensorValue

MAGIC = b"SKWT"
VERSION = 1

_CODE_TO_DTYPE = {v: k for k, v in DTYPE_CODES.items()}


def write_sidecar(entries: list[tuple[str, TensorValue]]) -> bytes:
    out = bytearray()
    out += MAGIC
    out += struct.pack("<II", VERSION, len(entries))
    for name, tv in entries:
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded))
        out += encoded
        out += struct.pack("<BB", DTYPE_CODES[tv.dtype], len(tv.dims))
        out += struct.pack(f"<{len(tv.dims)}I", *tv.dims)
        out += tv.data
    return bytes(out)


def read_sidecar(data: bytes) -> list[tuple[str, TensorValue]]:
    if data[:4] != MAGIC:
        raise ValueError("bad magic, not a weight sidecar")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported sidecar version {version}")
    offset = 12
    entries = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", data, offset)
        offset += 2
        dtype = _CODE_TO_DTYPE.get(code)
        if dtype is None:
            raise ValueError(f"unknown dtype code {code} for entry {name!r}")
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        n = 4
        for d in dims:
            n *= d
        blob = data[offset:offset + n]
        offset += n
        if len(blob) != n:
            raise ValueError(f"truncated data for entry {name!r}")
        entries.append((name, TensorValue(role=name, dtype=dtype,
                                          dims=tuple(dims), data=bytes(blob))))
    return entries
