"""Binary parameter checkpoints, one network per file.

Layout:
    8 bytes   magic b"APNNCKPT"
    uint32    format version (little endian)
    uint32    header length L in bytes
    L bytes   UTF-8 JSON header: widths, head, seed, iteration, dtype, plus free-form "extra"
    then for each layer l = 0 .. len(widths) - 2:
              W_l as float64 little endian, row-major, shape (widths[l+1], widths[l])
              b_l as float64 little endian, shape (widths[l+1],)
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..errors import ConfigError, MissingInputError
from .mlp import Mlp

MAGIC = b"APNNCKPT"
VERSION = 1


def save_checkpoint(path, net, seed=0, iteration=0, extra=None):
    header = {"widths": [int(w) for w in net.widths], "head": net.head, "seed": int(seed),
              "iteration": int(iteration), "dtype": str(net.weights[0].dtype), "extra": extra or {}}
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path):
    """Returns (Mlp, header dict)."""
    if not os.path.exists(path):
        raise MissingInputError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ConfigError(f"{path} is not a checkpoint (bad magic)")
    if len(data) < 16:
        raise ConfigError(f"{path}: truncated header")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ConfigError(f"{path}: corrupt header") from None
    widths = header["widths"]
    offset = 16 + hlen
    expected = offset + 8 * sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))
    if len(data) < expected:
        raise ConfigError(f"{path}: truncated ({len(data)} of {expected} bytes)")
    weights, biases = [], []
    dtype = np.dtype(header.get("dtype", "float64"))
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        n = fan_in * fan_out
        w = np.frombuffer(data, dtype="<f8", count=n, offset=offset).reshape(fan_out, fan_in)
        offset += 8 * n
        b = np.frombuffer(data, dtype="<f8", count=fan_out, offset=offset)
        offset += 8 * fan_out
        weights.append(w.astype(dtype))
        biases.append(b.astype(dtype))
    if offset != len(data):
        raise ConfigError(f"{path}: {len(data) - offset} trailing bytes")
    return Mlp(list(widths), weights, biases, header["head"]), header
