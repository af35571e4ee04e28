"""Bit-exact binary serialization for pipeline tensors.

Record layout (all multi-byte fields little-endian):

    magic   4 bytes  b"CSCF"
    version u16      1
    type    u8       1=Image, 2=CoeffMap, 3=Dictionary, 4=TransferOp
    rank    u8
    dims    u32 * rank
    payload IEEE-754 binary32, row-major in the declared layout
    crc     u32      CRC-32 of everything from magic through payload

Payload length is prod(dims) values, except TransferOp (tag 4) whose dims are
[K, K+1] and whose payload is the K*K mix matrix row-major, then the K bias
values, then one trailing ridge value: K*(K+1) + 1 floats total.

Several records may be concatenated in one file; `read_records` walks them.
Values are stored as binary32, so serialize(deserialize(bytes)) reproduces the
input bytes exactly, and float32-valued tensors round-trip bitwise.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .containers import CoeffMap, Dictionary, Image, TransferOp

MAGIC = b"CSCF"
VERSION = 1

TAG_IMAGE = 1
TAG_COEFF_MAP = 2
TAG_DICTIONARY = 3
TAG_TRANSFER_OP = 4

_TAG_RANK = {TAG_IMAGE: 2, TAG_COEFF_MAP: 3, TAG_DICTIONARY: 3, TAG_TRANSFER_OP: 2}


class TensorFormatError(ValueError):
    """Malformed tensor record; `offset` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


def _tag_of(obj) -> int:
    if isinstance(obj, Image):
        return TAG_IMAGE
    if isinstance(obj, CoeffMap):
        return TAG_COEFF_MAP
    if isinstance(obj, Dictionary):
        return TAG_DICTIONARY
    if isinstance(obj, TransferOp):
        return TAG_TRANSFER_OP
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _payload_of(obj) -> tuple[tuple[int, ...], np.ndarray]:
    if isinstance(obj, TransferOp):
        k = obj.atoms
        flat = np.concatenate([obj.mix.ravel(), obj.bias, [obj.ridge]])
        return (k, k + 1), flat
    return obj.data.shape, obj.data.ravel()


def dumps_tensor(obj) -> bytes:
    """Encode one tensor object as a CSCF record."""
    tag = _tag_of(obj)
    dims, flat = _payload_of(obj)
    if any(d < 1 for d in dims):
        raise ValueError(f"refusing to write record with zero dim: {dims}")
    header = MAGIC + struct.pack("<HBB", VERSION, tag, len(dims))
    header += struct.pack(f"<{len(dims)}I", *dims)
    payload = np.asarray(flat, dtype="<f4").tobytes()
    body = header + payload
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def loads_tensor(buf: bytes, offset: int = 0):
    """Decode one record starting at `offset`; returns (object, next_offset)."""
    base = offset
    if buf[base : base + 4] != MAGIC:
        raise TensorFormatError(f"bad magic {buf[base:base + 4]!r}", base)
    if len(buf) < base + 8:
        raise TensorFormatError("truncated header", len(buf))
    version, tag, rank = struct.unpack_from("<HBB", buf, base + 4)
    if version != VERSION:
        raise TensorFormatError(f"unsupported version {version}", base + 4)
    if tag not in _TAG_RANK:
        raise TensorFormatError(f"unknown type tag {tag}", base + 6)
    if rank != _TAG_RANK[tag]:
        raise TensorFormatError(
            f"type tag {tag} requires rank {_TAG_RANK[tag]}, got {rank}", base + 7
        )
    dims_off = base + 8
    if len(buf) < dims_off + 4 * rank:
        raise TensorFormatError("truncated dims", len(buf))
    dims = struct.unpack_from(f"<{rank}I", buf, dims_off)
    if any(d < 1 for d in dims):
        raise TensorFormatError(f"zero dim in {dims}", dims_off)
    count = int(np.prod(dims))
    if tag == TAG_TRANSFER_OP:
        if dims[1] != dims[0] + 1:
            raise TensorFormatError(f"transfer-op dims must be [K, K+1], got {dims}", dims_off)
        count += 1
    payload_off = dims_off + 4 * rank
    crc_off = payload_off + 4 * count
    if len(buf) < crc_off + 4:
        raise TensorFormatError("truncated payload", len(buf))
    (stored_crc,) = struct.unpack_from("<I", buf, crc_off)
    actual_crc = zlib.crc32(buf[base:crc_off]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise TensorFormatError(
            f"checksum failure: stored {stored_crc:#010x}, computed {actual_crc:#010x}",
            crc_off,
        )
    values = np.frombuffer(buf, dtype="<f4", count=count, offset=payload_off)
    values = values.astype(np.float64)
    if tag == TAG_IMAGE:
        obj = Image(values.reshape(dims))
    elif tag == TAG_COEFF_MAP:
        obj = CoeffMap(values.reshape(dims))
    elif tag == TAG_DICTIONARY:
        obj = Dictionary(values.reshape(dims))
    else:
        k = dims[0]
        mix = values[: k * k].reshape(k, k)
        bias = values[k * k : k * k + k]
        obj = TransferOp(mix, bias, float(values[-1]))
    return obj, crc_off + 4


def serialize_tensor(obj, path) -> None:
    """Write one tensor object (Image, CoeffMap, Dictionary, TransferOp)."""
    Path(path).write_bytes(dumps_tensor(obj))


def deserialize_tensor(path):
    """Read one tensor object; trailing bytes after the record are rejected."""
    buf = Path(path).read_bytes()
    obj, end = loads_tensor(buf)
    if end != len(buf):
        raise TensorFormatError(f"{len(buf) - end} trailing bytes after record", end)
    return obj


def write_records(objs, path) -> None:
    """Concatenate several tensor records into one file."""
    Path(path).write_bytes(b"".join(dumps_tensor(o) for o in objs))


def read_records(path) -> list:
    """Read all concatenated tensor records from a file."""
    buf = Path(path).read_bytes()
    out = []
    offset = 0
    while offset < len(buf):
        obj, offset = loads_tensor(buf, offset)
        out.append(obj)
    return out
