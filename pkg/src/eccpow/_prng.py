"""Deterministic SHA-256 counter stream used wherever consensus needs randomness.

Block ``t`` of the stream for ``seed`` is
``SHA256(seed as 8-byte big-endian two's complement || t as 8-byte big-endian)``.
The stream is consumed as 64-bit (or 32-bit) big-endian words.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Iterator

_U64 = 1 << 64


def seed_bytes(seed: int) -> bytes:
    return int(seed).to_bytes(8, "big", signed=True)


def stream_block(seed: int, t: int) -> bytes:
    return hashlib.sha256(seed_bytes(seed) + int(t).to_bytes(8, "big")).digest()


def words64(seed: int, prefetch: int = 0) -> Iterator[int]:
    """Yield the stream as unsigned 64-bit big-endian words, forever.

    ``prefetch`` words are hashed up front in one go, which only saves
    interpreter overhead; the sequence is the same.
    """
    prefix = seed_bytes(seed)
    blocks = -(-prefetch // 4)
    if blocks:
        raw = b"".join(hashlib.sha256(prefix + t.to_bytes(8, "big")).digest() for t in range(blocks))
        yield from struct.unpack(f">{4 * blocks}Q", raw)
    t = blocks
    while True:
        block = hashlib.sha256(prefix + t.to_bytes(8, "big")).digest()
        for off in range(0, 32, 8):
            yield int.from_bytes(block[off:off + 8], "big")
        t += 1


def words32(seed: int) -> Iterator[int]:
    """Yield the stream as unsigned 32-bit big-endian words, forever."""
    prefix = seed_bytes(seed)
    t = 0
    while True:
        block = hashlib.sha256(prefix + t.to_bytes(8, "big")).digest()
        for off in range(0, 32, 4):
            yield int.from_bytes(block[off:off + 4], "big")
        t += 1


def uniform_below(words: Iterator[int], bound: int) -> int:
    """Draw an integer uniformly from ``[0, bound)`` by rejection sampling.

    Words at or above the largest multiple of ``bound`` that fits in 64 bits
    are rejected so that the result carries no modulo bias.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    limit = _U64 - (_U64 % bound)
    while True:
        w = next(words)
        if w < limit:
            return w % bound


def derive_seed(seed: int, index: int) -> int:
    """Child seed for substream ``index`` of ``seed`` (signed 64-bit)."""
    digest = hashlib.sha256(b"substream" + seed_bytes(seed) + int(index).to_bytes(8, "big")).digest()
    return int.from_bytes(digest[:8], "big", signed=True)
