"""
Binary operator cache.

Layout (little-endian)::

    16 bytes   magic b"NLCHCONVOP-v1\\0\\0\\0"
    u64 M, u64 N, f64 eps, f64 alpha, u32 partition mode, u32 kernel id,
    f64 eta, u8 correction flag, 7 pad bytes
    zero or more blocks: u32 tag, u32 count, count * f64
        tag 1 rectangle (a1, b1, a2, b2), 2 bulged (k), 3 kernel parameters
    M * M f64, row-major

Blocks are recognised by the payload size: whatever lies between the fixed
header and the final ``8 M^2`` bytes must parse as a sequence of blocks.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import InvalidArgument, NLCHError
from .operators import KERNEL_IDS, PARTITION_MODES, ConvOperator, OperatorMeta

MAGIC = b"NLCHCONVOP-v1\0\0\0"
_HEAD = struct.Struct("<QQddIIdB7x")
_TLV = struct.Struct("<II")
DOMAIN_TAGS = {"rectangle": 1, "bulged": 2}
_DOMAIN_LEN = {1: 4, 2: 1}
TAG_KERNEL = 3
_MODES = {v: k for k, v in PARTITION_MODES.items()}
_KIDS = {v: k for k, v in KERNEL_IDS.items()}


class CacheFormatError(NLCHError):
    """Unreadable or foreign cache file."""


def _blocks(meta):
    out = []
    if meta.domain:
        out.append((DOMAIN_TAGS[meta.domain[0]], tuple(meta.domain[1:])))
    if meta.kernel_params:
        out.append((TAG_KERNEL, tuple(meta.kernel_params)))
    return out


def header_size(meta):
    """Bytes before the matrix payload."""
    return len(MAGIC) + _HEAD.size + sum(_TLV.size + 8 * len(p) for _, p in _blocks(meta))


def encode(op):
    meta = op.meta
    head = _HEAD.pack(op.M, meta.N, meta.eps, meta.alpha, PARTITION_MODES[meta.partition_mode],
                      KERNEL_IDS[meta.kernel_id], meta.eta, int(bool(meta.corrected)))
    tlv = b"".join(_TLV.pack(tag, len(p)) + struct.pack(f"<{len(p)}d", *p)
                   for tag, p in _blocks(meta))
    body = np.ascontiguousarray(op.matrix, dtype="<f8").tobytes()
    return MAGIC + head + tlv + body


def write(op, path):
    """Write ``op`` atomically (temporary file then rename)."""
    if not isinstance(op, ConvOperator):
        raise InvalidArgument("expected a ConvOperator")
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(encode(op))
    os.replace(tmp, path)
    return path


def decode(buf, grid=None):
    buf = memoryview(buf)
    if len(buf) < len(MAGIC) + _HEAD.size or bytes(buf[:16]) != MAGIC:
        raise CacheFormatError("not an operator cache (bad magic)")
    off = 16
    M, N, eps, alpha, mode, kid, eta, corr = _HEAD.unpack_from(buf, off)
    off += _HEAD.size
    if mode not in _MODES:
        raise CacheFormatError(f"unknown partition mode {mode}")
    if kid not in _KIDS:
        raise CacheFormatError(f"unknown kernel id {kid}")
    if corr not in (0, 1):
        raise CacheFormatError(f"bad correction flag {corr}")
    domain, kparams = (), ()
    names = {v: k for k, v in DOMAIN_TAGS.items()}
    end = len(buf) - 8 * M * M
    if end < off:
        raise CacheFormatError("truncated cache")
    while off < end:
        if end - off < _TLV.size:
            raise CacheFormatError("malformed parameter block")
        tag, n = _TLV.unpack_from(buf, off)
        off += _TLV.size
        if off + 8 * n > end:
            raise CacheFormatError("malformed parameter block")
        vals = struct.unpack_from(f"<{n}d", buf, off)
        off += 8 * n
        if tag in names and n == _DOMAIN_LEN[tag] and not domain:
            domain = (names[tag],) + vals
        elif tag == TAG_KERNEL and not kparams:
            kparams = vals
        else:
            raise CacheFormatError(f"unknown parameter block (tag {tag}, {n} values)")
    if len(buf) - off != 8 * M * M:
        raise CacheFormatError(f"payload holds {len(buf) - off} bytes, expected {8 * M * M}")
    if grid is not None and grid.M != M:
        raise CacheFormatError(f"cache has M = {M}, grid has {grid.M}")
    mat = np.frombuffer(buf, dtype="<f8", count=M * M, offset=off).reshape(M, M).astype(float)
    meta = OperatorMeta(N=int(N), eps=eps, alpha=alpha, kernel_id=_KIDS[kid],
                        partition_mode=_MODES[mode], eta=eta, corrected=bool(corr), domain=domain,
                        kernel_params=kparams)
    return ConvOperator(grid, mat, meta)


def read(path, grid=None):
    with open(path, "rb") as fh:
        return decode(fh.read(), grid)


def matches(op, meta):
    """True when the cached metadata equals ``meta`` on every stored field."""
    m = op.meta
    return (m.N == meta.N and m.eps == meta.eps and m.alpha == meta.alpha
            and m.partition_mode == meta.partition_mode and m.kernel_id == meta.kernel_id
            and m.eta == meta.eta and m.corrected == meta.corrected
            and tuple(m.domain) == tuple(meta.domain)
            and tuple(m.kernel_params) == tuple(meta.kernel_params))
