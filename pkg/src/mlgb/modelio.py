"""Model directory persistence.

A model directory contains:

    config.json     {"kind": ..., "config": {...}} echo of the training setup
    params.bin      trainable matrices (absent for deepwalk)
    embedding.bin   produced embedding matrix (embedding-based models)

The .bin format is a little-endian array bundle: magic b"MLGB" + version
byte, uint32 array count, then per array a uint16 name length, the UTF-8
name, a uint8 ndim, ndim uint64 dims, and the float64 row-major payload.
Arrays are written in sorted-name order so files are byte-reproducible.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

_MAGIC = b"MLGB\x01"


def write_arrays(path, arrays: dict) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name], dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes(order="C"))


def read_arrays(path) -> dict:
    out = {}
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not an array bundle")
        (count,) = struct.unpack("<I", fh.read(4))
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            dims = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            size = int(np.prod(dims)) if ndim else 1
            data = np.frombuffer(fh.read(8 * size), dtype="<f8")
            out[name] = data.reshape(dims).copy()
    return out


def save_model_dir(dir_path, kind: str, config: dict, params: dict = None,
                   embedding=None) -> None:
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "config.json", "w", encoding="utf-8") as fh:
        json.dump({"kind": kind, "config": config}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if params:
        write_arrays(root / "params.bin", params)
    if embedding is not None:
        write_arrays(root / "embedding.bin", {"embedding": embedding})


def load_model_dir(dir_path):
    root = Path(dir_path)
    with open(root / "config.json", "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    params = None
    embedding = None
    if (root / "params.bin").exists():
        params = read_arrays(root / "params.bin")
    if (root / "embedding.bin").exists():
        embedding = read_arrays(root / "embedding.bin")["embedding"]
    return meta["kind"], meta["config"], params, embedding
