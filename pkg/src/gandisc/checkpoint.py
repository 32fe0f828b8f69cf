"""Binary checkpoints: versioned header plus named float64 tensor blocks.

Layout (all integers little-endian)::

    b"GDCKPT\\0\\0"  u32 version  u32 header_len  header (UTF-8 JSON)
    repeated block:
        u16 name_len  name  u8 ndim  ndim x u64 dims  raw <f8 data  u32 crc32

The CRC covers the name, dims and data bytes of its block. Shared trunk
layers are stored once, under their discriminator names; the header records
the sharing topology so aliasing is rebuilt on load.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict

import numpy as np

from .models import MlpSpec, SharingConfig, build_mgan
from .numerics import SeededRng

MAGIC = b"GDCKPT\0\0"
VERSION = 1


class CheckpointError(ValueError):
    pass


class ChecksumError(CheckpointError):
    pass


class TopologyError(CheckpointError):
    pass


def named_parameters(bank, disc, clf):
    """Unique parameters by name; aliased tensors appear once."""
    out = {}
    seen = set()
    nets = [p for g in bank.generators for p in g.parameters()] + disc.parameters()
    if clf is not None:
        nets += clf.parameters()
    for p in nets:
        if id(p) in seen:
            continue
        if p.name in out:
            raise CheckpointError(f"duplicate parameter name {p.name}")
        seen.add(id(p))
        out[p.name] = p
    return out


def _block(name, arr):
    arr = np.ascontiguousarray(arr, dtype="<f8")
    nb = name.encode()
    body = struct.pack("<H", len(nb)) + nb + struct.pack("<B", arr.ndim)
    body += struct.pack(f"<{arr.ndim}Q", *arr.shape) + arr.tobytes()
    return body + struct.pack("<I", zlib.crc32(body[2:]))


def save_checkpoint(path, bank, disc, clf, sharing, generator_spec, extractor_spec,
                    optimizers=None, extra=None):
    """Write models (and optionally ``{"g": Adam, ...}`` optimizer states)."""
    params = named_parameters(bank, disc, clf)
    blocks = [(name, p.data) for name, p in params.items()]
    opt_meta = {}
    for key, opt in (optimizers or {}).items():
        if opt is None:
            continue
        opt_meta[key] = {"t": opt.t, "params": [p.name for p in opt.params]}
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            blocks.append((f"opt.{key}.m.{i}", m))
            blocks.append((f"opt.{key}.v.{i}", v))
    header = {
        "version": VERSION,
        "K": bank.K,
        "sharing": asdict(sharing),
        "generator_spec": asdict(generator_spec),
        "extractor_spec": asdict(extractor_spec),
        "n_classes": None if clf is None else clf.n_outputs,
        "has_classifier": clf is not None,
        "blocks": [name for name, _ in blocks],
        "optimizers": opt_meta,
        "extra": extra or {},
    }
    hb = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", VERSION, len(hb)) + hb)
        for name, arr in blocks:
            fh.write(_block(name, arr))


def read_checkpoint(path):
    """Returns ``(header, {name: array})`` after validating every block."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version, hlen = struct.unpack("<II", raw[8:16])
    if version != VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version}, expected {VERSION}")
    header = json.loads(raw[16:16 + hlen].decode())
    pos = 16 + hlen
    arrays = {}
    while pos < len(raw):
        start = pos
        (nlen,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos:pos + nlen].decode(errors="replace")
        pos += nlen
        (ndim,) = struct.unpack_from("<B", raw, pos)
        pos += 1
        dims = struct.unpack_from(f"<{ndim}Q", raw, pos)
        pos += 8 * ndim
        nbytes = 8 * int(np.prod(dims, dtype=np.int64))
        if pos + nbytes + 4 > len(raw):
            raise CheckpointError(f"{path}: truncated block {name}")
        data = raw[pos:pos + nbytes]
        pos += nbytes
        (crc,) = struct.unpack_from("<I", raw, pos)
        pos += 4
        if zlib.crc32(raw[start + 2:pos - 4]) != crc:
            raise ChecksumError(f"{path}: checksum mismatch in block {name}")
        arrays[name] = np.frombuffer(data, dtype="<f8").reshape(dims).astype(np.float64)
    missing = set(header["blocks"]) - set(arrays)
    if missing:
        raise CheckpointError(f"{path}: missing blocks {sorted(missing)}")
    return header, arrays


def load_checkpoint(path, expect_sharing=None):
    """Rebuild ``(bank, disc, clf, sharing, header, optimizer_states)``."""
    header, arrays = read_checkpoint(path)
    sharing = SharingConfig(**header["sharing"])
    if expect_sharing is not None and expect_sharing != sharing:
        raise TopologyError(f"checkpoint sharing {sharing} does not match expected {expect_sharing}")
    gspec = MlpSpec(**header["generator_spec"])
    espec = MlpSpec(**header["extractor_spec"])
    bank, disc, clf = build_mgan(gspec, espec, header["K"], sharing, SeededRng(0), header["n_classes"])
    if not header["has_classifier"]:
        clf = None
    params = named_parameters(bank, disc, clf)
    stored = {n for n in header["blocks"] if not n.startswith("opt.")}
    if stored != set(params):
        raise TopologyError(f"{path}: parameter set differs from the rebuilt topology")
    for name, p in params.items():
        if arrays[name].shape != p.data.shape:
            raise TopologyError(f"{path}: block {name} has shape {arrays[name].shape}, expected {p.data.shape}")
        p.data[...] = arrays[name]
    opt_states = {}
    for key, meta in header["optimizers"].items():
        n = len(meta["params"])
        opt_states[key] = {
            "t": meta["t"],
            "params": meta["params"],
            "m": [arrays[f"opt.{key}.m.{i}"] for i in range(n)],
            "v": [arrays[f"opt.{key}.v.{i}"] for i in range(n)],
        }
    return bank, disc, clf, sharing, header, opt_states
