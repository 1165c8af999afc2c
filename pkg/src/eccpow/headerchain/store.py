"""Blocks, the append-only chain file, and whole-chain validation."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..exceptions import HeaderError
from .header import BlockHeader, ChainConfig, header_hash

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Block:
    """A mined header plus the decoder output recorded for audit."""

    header: BlockHeader
    height: int
    solution_word: np.ndarray

    def to_record(self) -> dict:
        rec = {"height": self.height}
        rec.update(self.header.to_dict())
        rec["solution_word"] = encode_word(self.solution_word)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Block":
        header = BlockHeader.from_dict(rec)
        try:
            height = int(rec["height"])
            word = decode_word(rec["solution_word"], header.n)
        except (KeyError, TypeError, ValueError) as exc:
            raise HeaderError(f"malformed block record: {exc}") from exc
        return cls(header=header, height=height, solution_word=word)


def encode_word(bits) -> str:
    """Hex of the bits packed MSB-first, zero-padded to a whole byte."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def decode_word(text: str, n: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    bits = np.unpackbits(raw)
    if len(raw) != -(-n // 8) or bits[n:].any():
        raise ValueError(f"solution word does not encode exactly {n} bits")
    return bits[:n].copy()


def read_chain(path) -> list[Block]:
    """Load a chain file (one JSON object per line; blank lines ignored)."""
    blocks = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise HeaderError(f"{path}:{lineno}: {exc}") from None
            blocks.append(Block.from_record(rec))
    return blocks


def append_blocks(path, blocks: Iterable[Block]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for block in blocks:
            fh.write(json.dumps(block.to_record(), separators=(",", ":")) + "\n")


def write_chain(path, blocks: Iterable[Block]) -> None:
    Path(path).write_text("", encoding="utf-8")
    append_blocks(path, blocks)


@dataclass
class BlockReport:
    height: int
    linkage_ok: bool = True
    header_ok: bool = True
    puzzle_ok: bool = True
    word_ok: bool = True
    diagnostics: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.linkage_ok and self.header_ok and self.puzzle_ok and self.word_ok


@dataclass
class ChainReport:
    blocks: list[BlockReport]

    @property
    def valid(self) -> bool:
        return all(b.valid for b in self.blocks)

    def lines(self) -> list[str]:
        out = []
        for b in self.blocks:
            status = "ok" if b.valid else "INVALID"
            out.append(f"block {b.height}: {status}")
            out.extend(f"  error: {d}" for d in b.diagnostics)
            out.extend(f"  warning: {w}" for w in b.warnings)
        out.append(f"chain: {'valid' if self.valid else 'invalid'} ({len(self.blocks)} blocks)")
        return out


def validate_chain(blocks: Sequence[Block], cfg: ChainConfig) -> ChainReport:
    """Check linkage, header invariants and the puzzle of every block.

    The stored solution word is never trusted: the decoder is rerun and a
    stored word that differs from the recomputed output is reported.
    """
    from ..puzzle import verify_detailed

    reports = []
    prev: Block | None = None
    for i, block in enumerate(blocks):
        rep = BlockReport(height=block.height)
        h = block.header
        if block.height != i:
            rep.linkage_ok = False
            rep.diagnostics.append(f"height {block.height} at position {i}")
        try:
            h.validate()
        except HeaderError as exc:
            rep.header_ok = False
            rep.diagnostics.append(f"header invariant: {exc}")
        if rep.header_ok and not cfg.admits(h.n, h.w_c, h.w_r):
            rep.header_ok = False
            rep.diagnostics.append(f"code parameters (n={h.n}, wc={h.w_c}, wr={h.w_r}) not admitted by config")
        if prev is not None:
            try:
                expected = header_hash(prev.header)
            except HeaderError:
                expected = None
            if expected != h.prev_hash:
                rep.linkage_ok = False
                rep.diagnostics.append("prev_hash does not match the hash of the previous header")
            if h.timestamp < prev.header.timestamp:
                rep.warnings.append("timestamp earlier than previous block")
                logger.warning("block %d: timestamp decreases", block.height)
        if rep.header_ok:
            verdict = verify_detailed(h, cfg)
            if not verdict.valid:
                rep.puzzle_ok = False
                rep.diagnostics.append(f"puzzle verification failed ({verdict.reason})")
            if verdict.output is not None and not np.array_equal(verdict.output.word, block.solution_word):
                rep.word_ok = False
                rep.diagnostics.append("stored solution_word differs from the recomputed decoder output")
        else:
            rep.puzzle_ok = False
        reports.append(rep)
        prev = block
    return ChainReport(reports)
