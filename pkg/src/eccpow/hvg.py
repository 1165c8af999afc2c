"""Hash-vector generation: n bits from chained SHA-256 digests of the header."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .headerchain.header import BlockHeader, serialize_header


@dataclass(frozen=True, eq=False)
class HashVector:
    bits: np.ndarray  # uint8, values in {0, 1}
    segments_used: int

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        if not isinstance(other, HashVector):
            return NotImplemented
        return self.segments_used == other.segments_used and np.array_equal(self.bits, other.bits)


def digest_chain(first: bytes, count: int) -> bytes:
    """``s_1 || s_2 || ... || s_count`` with ``s_u = SHA256(s_{u-1})``."""
    out = [first]
    s = first
    for _ in range(count - 1):
        s = hashlib.sha256(s).digest()
        out.append(s)
    return b"".join(out)


def bits_from_serialized(serialized: bytes, n: int) -> np.ndarray:
    """First ``n`` bits (MSB-first) of the digest chain seeded by ``serialized``."""
    segments = -(-n // 256)
    raw = digest_chain(hashlib.sha256(serialized).digest(), segments)
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n]


def build_hash_vector(cbh: BlockHeader, n: int | None = None) -> HashVector:
    """Hash vector of length ``n`` (defaults to ``cbh.n``) for a header with its nonce.

    Segment 1 is SHA-256 of the serialized header; every further segment is
    SHA-256 of the previous one. No partial segment is produced when 256
    divides ``n``.
    """
    if n is None:
        n = cbh.n
    if n < 1:
        raise ValueError("hash vector length must be positive")
    return HashVector(bits=bits_from_serialized(serialize_header(cbh), n), segments_used=-(-n // 256))
