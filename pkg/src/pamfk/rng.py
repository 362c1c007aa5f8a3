"""Counter-based random streams keyed by (seed, index, lane).

Every draw is a pure function of its key and position, computed with the
Philox4x32-10 block cipher (Salmon et al., SC'11). Nothing is shared between
streams, so a Monte Carlo sample can be regenerated in isolation and a run
gives the same numbers no matter how samples are split across workers.

Counter layout of one Philox block::

    c0 = block number within the stream
    c1 = (kind << 16) | lane      kind 0: normals, kind 1: uniforms
    c2 = index & 0xffffffff
    c3 = index >> 32
    key = (seed & 0xffffffff, seed >> 32)

Block ``b`` of the normal sequence yields normals ``2b`` and ``2b + 1`` by the
Box-Muller transform of two 53-bit uniforms; block ``b`` of the uniform
sequence yields uniforms ``2b`` and ``2b + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "StreamKey",
    "Stream",
    "derive_stream",
    "normal_block",
    "uniform_block",
    "philox4x32",
]

_U64 = (1 << 64) - 1
MAX_LANE = (1 << 16) - 1
_NORMAL, _UNIFORM = 0, 1


@njit(cache=True)
def _philox_rounds(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = np.uint64(0xD2511F53) * np.uint64(c0)
        p1 = np.uint64(0xCD9E8D57) * np.uint64(c2)
        hi0 = np.uint32(p0 >> np.uint64(32))
        lo0 = np.uint32(p0 & np.uint64(0xFFFFFFFF))
        hi1 = np.uint32(p1 >> np.uint64(32))
        lo1 = np.uint32(p1 & np.uint64(0xFFFFFFFF))
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = np.uint32(k0 + np.uint32(0x9E3779B9))
        k1 = np.uint32(k1 + np.uint32(0xBB67AE85))
    return c0, c1, c2, c3


@njit(cache=True)
def _philox_many(ctr, key, out):
    for r in range(ctr.shape[0]):
        x = _philox_rounds(ctr[r, 0], ctr[r, 1], ctr[r, 2], ctr[r, 3], key[0], key[1])
        out[r, 0] = x[0]
        out[r, 1] = x[1]
        out[r, 2] = x[2]
        out[r, 3] = x[3]


@njit(cache=True)
def _to_unit(a, b):
    # 53-bit uniform in [0, 1)
    hi = np.uint64(a) >> np.uint64(5)
    lo = np.uint64(b) >> np.uint64(6)
    return float(hi * np.uint64(67108864) + lo) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def _fill(k0, k1, idx, c1, offset, kind, out):
    count = out.shape[1]
    two_pi = 2.0 * np.pi
    for r in range(idx.shape[0]):
        i = idx[r]
        c2 = np.uint32(i & np.uint64(0xFFFFFFFF))
        c3 = np.uint32(i >> np.uint64(32))
        q = 0
        pos = offset
        while q < count:
            b = pos >> 1
            x0, x1, x2, x3 = _philox_rounds(np.uint32(b), c1, c2, c3, k0, k1)
            u1 = _to_unit(x0, x1)
            u2 = _to_unit(x2, x3)
            if kind == 0:
                rad = np.sqrt(-2.0 * np.log(1.0 - u1))
                v0 = rad * np.cos(two_pi * u2)
                v1 = rad * np.sin(two_pi * u2)
            else:
                v0 = u1
                v1 = u2
            if pos & 1 == 0:
                out[r, q] = v0
                q += 1
                pos += 1
                if q < count:
                    out[r, q] = v1
                    q += 1
                    pos += 1
            else:
                out[r, q] = v1
                q += 1
                pos += 1


def philox4x32(counter, key) -> np.ndarray:
    """Raw Philox4x32-10 block function.

    ``counter`` has shape (..., 4) and ``key`` shape (2,), both uint32 words.
    """
    ctr = np.ascontiguousarray(np.asarray(counter, dtype=np.uint32))
    shape = ctr.shape
    ctr = ctr.reshape(-1, 4)
    k = np.asarray(key, dtype=np.uint32).reshape(2)
    out = np.empty_like(ctr)
    _philox_many(ctr, k, out)
    return out.reshape(shape)


def _check_u64(name: str, value: int) -> int:
    value = int(value)
    if not 0 <= value <= _U64:
        raise ValueError(f"{name} must fit in an unsigned 64-bit integer, got {value}")
    return value


def _draw(seed, indices, lane, count, offset, kind) -> np.ndarray:
    seed = _check_u64("seed", seed)
    lane = int(lane)
    if not 0 <= lane <= MAX_LANE:
        raise ValueError(f"lane must lie in [0, {MAX_LANE}], got {lane}")
    if offset < 0 or count < 0:
        raise ValueError("offset and count must be nonnegative")
    if (offset + count + 1) // 2 > 0xFFFFFFFF:
        raise ValueError("stream position exceeds 2**33 draws")
    idx = np.atleast_1d(np.asarray(indices, dtype=np.uint64))
    out = np.empty((idx.shape[0], int(count)), dtype=np.float64)
    if count:
        k0 = np.uint32(seed & 0xFFFFFFFF)
        k1 = np.uint32(seed >> 32)
        c1 = np.uint32((kind << 16) | lane)
        _fill(k0, k1, idx, c1, int(offset), kind, out)
    return out


def normal_block(seed: int, indices, lane: int, count: int, offset: int = 0) -> np.ndarray:
    """Standard normals for many streams at once.

    Row ``r`` holds draws ``offset .. offset+count-1`` of the stream keyed by
    ``(seed, indices[r], lane)``; it is bit-identical to what
    ``derive_stream(StreamKey(seed, indices[r], lane))`` produces.
    """
    return _draw(seed, indices, lane, count, offset, _NORMAL)


def uniform_block(seed: int, indices, lane: int, count: int, offset: int = 0) -> np.ndarray:
    """Uniforms on [0, 1) for many streams at once (see :func:`normal_block`)."""
    return _draw(seed, indices, lane, count, offset, _UNIFORM)


@dataclass(frozen=True)
class StreamKey:
    seed: int
    index: int = 0
    lane: int = 0

    def __post_init__(self):
        _check_u64("seed", self.seed)
        _check_u64("index", self.index)
        if not 0 <= int(self.lane) <= MAX_LANE:
            raise ValueError(f"lane must lie in [0, {MAX_LANE}], got {self.lane}")


class Stream:
    """Sequential view of one keyed stream.

    The normal and uniform sequences have separate positions. A stream is a
    cursor over fixed values, so two streams with equal keys produce equal
    draws; do not share one instance between threads.
    """

    def __init__(self, key: StreamKey):
        self.key = key
        self._normal_pos = 0
        self._uniform_pos = 0

    def normal(self, size=None) -> np.ndarray | float:
        n = int(np.prod(size)) if size is not None else 1
        out = normal_block(self.key.seed, [self.key.index], self.key.lane, n, self._normal_pos)[0]
        self._normal_pos += n
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def uniform(self, size=None) -> np.ndarray | float:
        n = int(np.prod(size)) if size is not None else 1
        out = uniform_block(self.key.seed, [self.key.index], self.key.lane, n, self._uniform_pos)[0]
        self._uniform_pos += n
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def __repr__(self):
        return f"Stream({self.key}, normal_pos={self._normal_pos}, uniform_pos={self._uniform_pos})"


def derive_stream(key: StreamKey) -> Stream:
    return Stream(key)
