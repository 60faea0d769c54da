"""Single-file binary checkpoints.

Layout (all integers little-endian)::

    b"VKSQ"  u32 version
    u32 n + n bytes   model config (JSON, UTF-8)
    u32 n + n bytes   vocabulary (JSON, UTF-8)
    u32 tensor count
    per tensor: u16 name length, name, u8 ndim, u32 dims..., float32 data
    b"END!"  u32 crc32 of every preceding byte

Tensors are stored as float32; float64 parameters are rounded on save.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import CheckpointError, VersionMismatchError
from .model import ModelConfig, Params
from .vocab import TokenVocab

MAGIC = b"VKSQ"
TRAILER = b"END!"
FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    params: Params
    config: ModelConfig
    vocab: TokenVocab


def _blob(obj) -> bytes:
    data = json.dumps(obj, sort_keys=True).encode("utf-8")
    return struct.pack("<I", len(data)) + data


def dumps(params: Params, config: ModelConfig, vocab: TokenVocab, version: int = FORMAT_VERSION) -> bytes:
    parts = [MAGIC, struct.pack("<I", version), _blob(config.to_dict()), _blob(vocab.to_dict())]
    parts.append(struct.pack("<I", len(params)))
    for name, arr in params.items():
        key = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<H", len(key)) + key + struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    body = b"".join(parts)
    return body + TRAILER + struct.pack("<I", zlib.crc32(body))


def save_checkpoint(params: Params, config: ModelConfig, vocab: TokenVocab, path) -> None:
    data = dumps(params, config, vocab)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint is truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(data: bytes) -> ModelBundle:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError("not a visemekit checkpoint")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"checkpoint format version {version}, expected {FORMAT_VERSION}")
    try:
        config = ModelConfig(**json.loads(r.take(r.unpack("<I")[0])))
        vocab = TokenVocab.from_dict(json.loads(r.take(r.unpack("<I")[0])))
    except (ValueError, TypeError, KeyError) as exc:
        raise CheckpointError(f"corrupt header: {exc}") from None
    params: Params = {}
    for _ in range(r.unpack("<I")[0]):
        name = r.take(r.unpack("<H")[0]).decode("utf-8")
        ndim = r.unpack("<B")[0]
        shape = r.unpack(f"<{ndim}I")
        count = int(np.prod(shape, dtype=np.int64))
        params[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
    end = r.pos
    if r.take(4) != TRAILER:
        raise CheckpointError("missing checkpoint trailer")
    (crc,) = r.unpack("<I")
    if crc != zlib.crc32(data[:end]):
        raise CheckpointError("checkpoint checksum mismatch")
    if r.pos != len(data):
        raise CheckpointError("trailing bytes after checkpoint")
    return ModelBundle(params, config, vocab)


def load_checkpoint(path) -> ModelBundle:
    with open(path, "rb") as fh:
        return loads(fh.read())
