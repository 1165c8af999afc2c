"""Block header, its canonical 88-byte layout, and the chain configuration."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path

from ..exceptions import ConfigError, HeaderError

HEADER_SIZE = 88
MAX_CODE_LENGTH = 8192

# version, prev_hash, merkle_root, timestamp, n, w_c, w_r, nonce
_LAYOUT = struct.Struct(">I32s32sQIHHI")
assert _LAYOUT.size == HEADER_SIZE

_WIDTHS = {
    "version": 32,
    "timestamp": 64,
    "n": 32,
    "w_c": 16,
    "w_r": 16,
    "nonce": 32,
}


def check_code_params(n: int, w_c: int, w_r: int) -> None:
    """Raise :class:`HeaderError` unless (n, w_c, w_r) are admissible."""
    if w_c < 3:
        raise HeaderError(f"column degree w_c={w_c} must be at least 3")
    if w_r <= w_c:
        raise HeaderError(f"row degree w_r={w_r} must exceed w_c={w_c}")
    if n < w_r:
        raise HeaderError(f"code length n={n} is smaller than w_r={w_r}")
    if n % w_r:
        raise HeaderError(f"w_r={w_r} does not divide n={n}")
    if n > MAX_CODE_LENGTH:
        raise HeaderError(f"code length n={n} exceeds cap {MAX_CODE_LENGTH}")


@dataclass(frozen=True)
class BlockHeader:
    """The eight consensus fields of a block.

    Construction only checks that every field fits its wire width, so that
    tampered headers can still be loaded and diagnosed. The protocol
    invariants are enforced by :meth:`validate` and by serialization.
    """

    version: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    n: int
    w_c: int
    w_r: int
    nonce: int = 0

    def __post_init__(self):
        for name in ("prev_hash", "merkle_root"):
            value = getattr(self, name)
            if not isinstance(value, (bytes, bytearray)) or len(value) != 32:
                raise HeaderError(f"{name} must be exactly 32 bytes")
            if isinstance(value, bytearray):
                object.__setattr__(self, name, bytes(value))
        for name, bits in _WIDTHS.items():
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise HeaderError(f"{name} must be an integer")
            if not 0 <= value < (1 << bits):
                raise HeaderError(f"{name}={value} does not fit in {bits} unsigned bits")

    @property
    def m(self) -> int:
        return self.n * self.w_c // self.w_r

    def validate(self) -> None:
        check_code_params(self.n, self.w_c, self.w_r)

    def with_nonce(self, nonce: int) -> "BlockHeader":
        return replace(self, nonce=nonce)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "prev_hash": self.prev_hash.hex(),
            "merkle_root": self.merkle_root.hex(),
            "timestamp": self.timestamp,
            "n": self.n,
            "wc": self.w_c,
            "wr": self.w_r,
            "nonce": self.nonce,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BlockHeader":
        try:
            return cls(
                version=int(d["version"]),
                prev_hash=bytes.fromhex(d["prev_hash"]),
                merkle_root=bytes.fromhex(d["merkle_root"]),
                timestamp=int(d["timestamp"]),
                n=int(d["n"]),
                w_c=int(d["wc"]),
                w_r=int(d["wr"]),
                nonce=int(d["nonce"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, HeaderError):
                raise
            raise HeaderError(f"malformed header record: {exc}") from exc


def header_prefix(h: BlockHeader) -> bytes:
    """The first 84 serialized bytes, i.e. everything except the nonce."""
    return serialize_header(h)[:84]


def serialize_header(h: BlockHeader) -> bytes:
    """Canonical big-endian encoding, 88 bytes, nonce last."""
    h.validate()
    return _LAYOUT.pack(
        h.version, h.prev_hash, h.merkle_root, h.timestamp, h.n, h.w_c, h.w_r, h.nonce
    )


def deserialize_header(data: bytes) -> BlockHeader:
    """Inverse of :func:`serialize_header` (field widths only, no invariants)."""
    if len(data) != HEADER_SIZE:
        raise HeaderError(f"header must be {HEADER_SIZE} bytes, got {len(data)}")
    fields = _LAYOUT.unpack(data)
    return BlockHeader(*fields)


def header_hash(h: BlockHeader) -> bytes:
    return hashlib.sha256(serialize_header(h)).digest()


def seed_from_prev_hash(prev_hash: bytes) -> int:
    """Initial permutation seed: the plain byte sum of the previous hash.

    Any byte permutation of ``prev_hash`` gives the same seed.
    """
    if len(prev_hash) != 32:
        raise HeaderError("previous hash must be exactly 32 bytes")
    return sum(prev_hash)


_CONFIG_KEYS = (
    "w_c",
    "w_r",
    "difficulty_levels",
    "max_iter",
    "epsilon_num",
    "epsilon_den",
    "llr_scale",
    "retarget_window",
    "target_block_seconds",
)


@dataclass(frozen=True)
class ChainConfig:
    """Published protocol constants shared by every miner and verifier."""

    w_c: int = 3
    w_r: int = 6
    difficulty_levels: tuple[int, ...] = (24, 36, 48, 60, 72)
    max_iter: int = 20
    epsilon_num: int = 1
    epsilon_den: int = 4
    llr_scale: int = 8
    retarget_window: int = 10
    target_block_seconds: int = 60

    def __post_init__(self):
        object.__setattr__(self, "difficulty_levels", tuple(int(x) for x in self.difficulty_levels))
        if not self.difficulty_levels:
            raise ConfigError("difficulty_levels must not be empty")
        for n in self.difficulty_levels:
            try:
                check_code_params(n, self.w_c, self.w_r)
            except HeaderError as exc:
                raise ConfigError(f"difficulty level n={n}: {exc}") from None
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if self.epsilon_den <= 0 or not 0 < self.epsilon < Fraction(1, 2):
            raise ConfigError("epsilon must lie strictly between 0 and 1/2")
        if self.llr_scale < 1:
            raise ConfigError("llr_scale must be positive")
        if self.retarget_window < 1:
            raise ConfigError("retarget_window must be positive")
        if self.target_block_seconds < 1:
            raise ConfigError("target_block_seconds must be positive")

    @property
    def epsilon(self) -> Fraction:
        return Fraction(self.epsilon_num, self.epsilon_den)

    @cached_property
    def decoder_params(self):
        from ..decoder import DecoderParams

        return DecoderParams(max_iter=self.max_iter, epsilon=self.epsilon, llr_scale=self.llr_scale)

    def admits(self, n: int, w_c: int, w_r: int) -> bool:
        return w_c == self.w_c and w_r == self.w_r and n in self.difficulty_levels

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _CONFIG_KEYS}
        d["difficulty_levels"] = list(self.difficulty_levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChainConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a flat key-value object")
        missing = [k for k in _CONFIG_KEYS if k not in d]
        extra = [k for k in d if k not in _CONFIG_KEYS]
        if missing or extra:
            raise ConfigError(f"config keys mismatch: missing={missing} unexpected={extra}")
        try:
            kwargs = {k: int(d[k]) for k in _CONFIG_KEYS if k != "difficulty_levels"}
            kwargs["difficulty_levels"] = tuple(int(x) for x in d["difficulty_levels"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config values must be integers: {exc}") from None
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ChainConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
