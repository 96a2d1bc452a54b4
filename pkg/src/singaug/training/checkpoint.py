"""Versioned binary checkpoints.

Byte layout (all integers little-endian):

    magic   4 bytes  b"SGCK"
    version u32      currently 1
    hash    u32 length + ASCII hex of the config hash
    meta    u32 length + UTF-8 JSON (step counts, best validation, ...)
    blobs   u32 count, then per blob:
              u16 name length + UTF-8 name
              u32 rows, u32 cols
              rows*cols float32 little-endian values

Model parameters are stored under ``model.<name>``, predictor parameters
under ``predictor.<name>``, and Adam moments under ``opt.m.<name>`` /
``opt.v.<name>``; training state scalars ride in the JSON meta block.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from ..errors import CompatibilityError
from ..nn.layers import Module
from .optim import Adam

MAGIC = b"SGCK"
VERSION = 1


def _write_blob(fh, name: str, arr: np.ndarray):
    encoded = name.encode("utf-8")
    fh.write(struct.pack("<H", len(encoded)))
    fh.write(encoded)
    fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_blob(fh):
    (name_len,) = struct.unpack("<H", fh.read(2))
    name = fh.read(name_len).decode("utf-8")
    rows, cols = struct.unpack("<II", fh.read(8))
    data = np.frombuffer(fh.read(rows * cols * 4), dtype="<f4").reshape(rows, cols)
    return name, data


def collect_blobs(model: Module, predictor: Module, optimizer: Adam | None):
    blobs: dict[str, np.ndarray] = {}
    for name, p in model.parameters().items():
        blobs[f"model.{name}"] = p.data
    for name, p in predictor.parameters().items():
        blobs[f"predictor.{name}"] = p.data
    if optimizer is not None:
        for name, arr in optimizer.m.items():
            blobs[f"opt.m.{name}"] = arr
        for name, arr in optimizer.v.items():
            blobs[f"opt.v.{name}"] = arr
    return blobs


def save_checkpoint(path, model: Module, predictor: Module,
                    optimizer: Adam | None, config_hash: str, meta: dict):
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    hash_bytes = config_hash.encode("ascii")
    buf.write(struct.pack("<I", len(hash_bytes)))
    buf.write(hash_bytes)
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(meta_bytes)))
    buf.write(meta_bytes)
    blobs = collect_blobs(model, predictor, optimizer)
    buf.write(struct.pack("<I", len(blobs)))
    for name in sorted(blobs):
        _write_blob(buf, name, blobs[name])
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_checkpoint(path, expected_hash: str | None = None):
    """Parse a checkpoint into (config_hash, meta, blob dict)."""
    try:
        with open(path, "rb") as fh:
            if fh.read(4) != MAGIC:
                raise CompatibilityError(f"{path}: not a singaug checkpoint")
            (version,) = struct.unpack("<I", fh.read(4))
            if version != VERSION:
                raise CompatibilityError(
                    f"{path}: version {version} != supported {VERSION}"
                )
            (hash_len,) = struct.unpack("<I", fh.read(4))
            config_hash = fh.read(hash_len).decode("ascii")
            (meta_len,) = struct.unpack("<I", fh.read(4))
            meta = json.loads(fh.read(meta_len).decode("utf-8"))
            (n_blobs,) = struct.unpack("<I", fh.read(4))
            blobs = {}
            for _ in range(n_blobs):
                name, data = _read_blob(fh)
                blobs[name] = data
    except (struct.error, ValueError, EOFError) as exc:
        raise CompatibilityError(f"{path}: truncated or corrupt ({exc})") from None
    if expected_hash is not None and config_hash != expected_hash:
        raise CompatibilityError(
            f"{path}: config hash {config_hash[:12]}... does not match "
            f"the running configuration {expected_hash[:12]}..."
        )
    return config_hash, meta, blobs


def load_checkpoint(path, model: Module, predictor: Module,
                    optimizer: Adam | None, expected_hash: str | None = None) -> dict:
    """Restore parameters (and moments) in place; returns the meta dict."""
    _, meta, blobs = read_checkpoint(path, expected_hash)
    targets: dict[str, np.ndarray] = {}
    for name, p in model.parameters().items():
        targets[f"model.{name}"] = p.data
    for name, p in predictor.parameters().items():
        targets[f"predictor.{name}"] = p.data
    if optimizer is not None:
        for name, arr in optimizer.m.items():
            targets[f"opt.m.{name}"] = arr
        for name, arr in optimizer.v.items():
            targets[f"opt.v.{name}"] = arr
    missing = set(targets) - set(blobs)
    if missing:
        raise CompatibilityError(f"{path}: missing blobs {sorted(missing)[:3]}...")
    for name, dest in targets.items():
        src = blobs[name]
        if src.shape != dest.shape:
            raise CompatibilityError(
                f"{path}: blob {name} has shape {src.shape}, expected {dest.shape}"
            )
        dest[:] = src.astype(dest.dtype)
    if optimizer is not None and "optimizer_step" in meta:
        optimizer.step_count = int(meta["optimizer_step"])
    return meta
