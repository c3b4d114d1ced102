"""Binary checkpoint container.

Byte layout (all integers little-endian)::

    offset 0   8 bytes   magic  b"MMEDCKPT"
    offset 8   uint32    format version (currently 1)
    offset 12  uint64    header length H in bytes
    offset 20  H bytes   UTF-8 JSON header
    offset 20+H          parameter data, float64 little-endian ('<f8'), row-major

The header holds ``config`` (model hyperparameters), ``vocab_sha256`` (digest
of the vocabulary the model was trained with), ``params`` (a list of
``{"name", "shape", "offset"}`` entries, offsets in bytes from the start of the
data block, in parameter order) and a free-form ``extra`` mapping.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..numerics import Tensor
from .config import ModelConfig
from .transformer import Transformer

MAGIC = b"MMEDCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


def checkpoint_bytes(model: Transformer, vocab_sha256: str, extra: dict | None = None) -> bytes:
    entries, blobs, offset = [], [], 0
    for name, p in model.params.items():
        blob = np.ascontiguousarray(p.data, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(p.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({"config": model.config.to_dict(), "vocab_sha256": vocab_sha256,
                         "params": entries, "extra": extra or {}}, sort_keys=True).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(blobs)


def save_checkpoint(path: str | Path, model: Transformer, vocab_sha256: str, extra: dict | None = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(model, vocab_sha256, extra))


def load_checkpoint(path: str | Path, vocab_sha256: str | None = None) -> tuple[Transformer, dict]:
    """Rebuild the model; returns it with the decoded header.

    When ``vocab_sha256`` is given it must match the stored digest.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise CheckpointError(f"{path}: file too short for a checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    header = json.loads(raw[_PREFIX.size:_PREFIX.size + hlen].decode("utf-8"))
    if vocab_sha256 is not None and header["vocab_sha256"] != vocab_sha256:
        raise CheckpointError(f"{path}: checkpoint was trained with a different vocabulary")
    data = memoryview(raw)[_PREFIX.size + hlen:]
    params = {}
    for e in header["params"]:
        count = int(np.prod(e["shape"], dtype=np.int64))
        end = e["offset"] + 8 * count
        if end > len(data):
            raise CheckpointError(f"{path}: truncated data for parameter {e['name']}")
        arr = np.frombuffer(data[e["offset"]:end], dtype="<f8").astype(np.float64).reshape(e["shape"])
        params[e["name"]] = Tensor(arr, requires_grad=True, name=e["name"])
    return Transformer(ModelConfig.from_dict(header["config"]), params), header
