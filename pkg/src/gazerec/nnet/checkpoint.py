"""Checkpoint binary format.

Layout (little endian):

    magic    8 bytes  b"GZRCKPT1"
    version  uint32   currently 1
    hlen     uint32   header length in bytes
    header   hlen bytes of UTF-8 JSON:
               spec_text, iteration, dtype, params: [{name, shape, dtype}],
               has_velocity, rng_states (optional, for exact resume)
    blocks   for each param in header order: uint64 byte length + raw data;
             then the same sequence again for velocities when present

Any structural inconsistency (bad magic, short read, block length
mismatch) raises CheckpointError without leaving partial state behind.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .config import parse_network_spec
from .network import Network

MAGIC = b"GZRCKPT1"
VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(
    path: str | os.PathLike,
    network: Network,
    iteration: int = 0,
    velocity: dict[str, np.ndarray] | None = None,
    rng_states: dict | None = None,
) -> None:
    params = network.parameters()
    header = {
        "spec_text": network.spec.render(),
        "iteration": int(iteration),
        "dtype": network.dtype.name,
        "params": [
            {"name": k, "shape": list(v.shape), "dtype": v.dtype.name}
            for k, v in params.items()
        ],
        "has_velocity": velocity is not None,
        "rng_states": rng_states,
    }
    blob = json.dumps(header).encode()
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for arr in params.values():
            raw = np.ascontiguousarray(arr).tobytes()
            fh.write(struct.pack("<Q", len(raw)))
            fh.write(raw)
        if velocity is not None:
            for name in params:
                raw = np.ascontiguousarray(velocity[name]).tobytes()
                fh.write(struct.pack("<Q", len(raw)))
                fh.write(raw)
    os.replace(tmp, path)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint: wanted {n} bytes, got {len(data)}")
    return data


def _read_blocks(fh, descriptors) -> dict[str, np.ndarray]:
    out = {}
    for desc in descriptors:
        (nbytes,) = struct.unpack("<Q", _read_exact(fh, 8))
        arr = np.frombuffer(_read_exact(fh, nbytes), dtype=desc["dtype"])
        expected = int(np.prod(desc["shape"])) if desc["shape"] else 1
        if arr.size != expected:
            raise CheckpointError(
                f"param {desc['name']}: {arr.size} values, expected {expected}"
            )
        out[desc["name"]] = arr.reshape(desc["shape"]).copy()
    return out


def load_checkpoint(path: str | os.PathLike, dtype=None):
    """Rebuild the network (and optimizer velocity) from a checkpoint.

    Returns (network, iteration, velocity-or-None, rng_states-or-None).
    """
    try:
        with open(path, "rb") as fh:
            if _read_exact(fh, 8) != MAGIC:
                raise CheckpointError("bad magic; not a checkpoint file")
            version, hlen = struct.unpack("<II", _read_exact(fh, 8))
            if version != VERSION:
                raise CheckpointError(f"unsupported checkpoint version {version}")
            try:
                header = json.loads(_read_exact(fh, hlen).decode())
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                raise CheckpointError(f"corrupt header: {e}") from None
            spec = parse_network_spec(header["spec_text"])
            load_dtype = dtype if dtype is not None else np.dtype(header["dtype"])
            network = Network(spec, dtype=load_dtype)
            params = _read_blocks(fh, header["params"])
            network.set_parameters(params)
            velocity = None
            if header.get("has_velocity"):
                velocity = {
                    k: v.astype(load_dtype)
                    for k, v in _read_blocks(fh, header["params"]).items()
                }
            return network, int(header["iteration"]), velocity, header.get("rng_states")
    except struct.error as e:
        raise CheckpointError(f"corrupt checkpoint: {e}") from None
