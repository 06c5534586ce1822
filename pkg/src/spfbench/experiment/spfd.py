"""SPFD binary container.

Layout (little-endian)::

    b"SPFD" | u16 version | u8 kind | u8 reserved
    u32 meta_len | meta (UTF-8 JSON)
    u32 n_arrays | per array: u16 name_len, name, u8 ndim, ndim x u64 dims
    float64 payload of every array in order
    u32 CRC-32 of all preceding bytes
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import BadMagicError, CrcError, FormatError, TruncatedError, VersionError

MAGIC = b"SPFD"
VERSION = 1
KINDS = {"trajectory": 1, "latent": 2, "reducer": 3, "model": 4, "eval": 5}
_KIND_NAMES = {v: k for k, v in KINDS.items()}


@dataclass
class Container:
    kind: str
    meta: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)


def encode_container(c):
    if c.kind not in KINDS:
        raise FormatError(f"unknown payload kind {c.kind!r}")
    meta = json.dumps(c.meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    head = [MAGIC, struct.pack("<HBB", VERSION, KINDS[c.kind], 0),
            struct.pack("<I", len(meta)), meta, struct.pack("<I", len(c.arrays))]
    payload = []
    for name, arr in c.arrays.items():
        a = np.asarray(arr, dtype="<f8")
        nb = name.encode("utf-8")
        head.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", a.ndim))
        head.append(struct.pack(f"<{a.ndim}Q", *a.shape))
        payload.append(a.tobytes())
    body = b"".join(head + payload)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf) - 4:
            raise TruncatedError(f"container ends before byte {self.pos + n}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_container(buf):
    buf = bytes(buf)
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError("not an SPFD container")
    if len(buf) < 8:
        raise TruncatedError("container header is incomplete")
    version, kind, _ = struct.unpack("<HBB", buf[4:8])
    if version != VERSION:
        raise VersionError(f"container version {version}, this reader supports {VERSION}")
    r = _Reader(buf)
    r.pos = 8
    (meta_len,) = r.unpack("<I")
    meta_raw = r.take(meta_len)
    (n_arrays,) = r.unpack("<I")
    specs = []
    for _ in range(n_arrays):
        (nl,) = r.unpack("<H")
        name = r.take(nl).decode("utf-8", errors="replace")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}Q") if ndim else ()
        specs.append((name, shape))
    need = sum(8 * int(np.prod(s, dtype=np.int64)) for _, s in specs)
    if len(buf) - 4 - r.pos != need:
        raise TruncatedError(f"payload holds {len(buf) - 4 - r.pos} bytes, header declares {need}")
    (crc,) = struct.unpack("<I", buf[-4:])
    if zlib.crc32(buf[:-4]) & 0xFFFFFFFF != crc:
        raise CrcError("CRC-32 mismatch")
    if kind not in _KIND_NAMES:
        raise FormatError(f"unknown payload kind tag {kind}")
    try:
        meta = json.loads(meta_raw.decode("utf-8"))
    except ValueError as exc:
        raise FormatError(f"bad metadata: {exc}") from exc
    arrays = {}
    for name, shape in specs:
        n = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(r.take(8 * n), dtype="<f8").astype(np.float64).reshape(shape)
    return Container(_KIND_NAMES[kind], meta, arrays)


def atomic_write_bytes(path, data):
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_container(path, c):
    atomic_write_bytes(path, encode_container(c))


def read_container(path, kind=None):
    with open(path, "rb") as fh:
        c = decode_container(fh.read())
    if kind is not None and c.kind != kind:
        raise FormatError(f"{path}: expected a {kind} container, found {c.kind}")
    return c
