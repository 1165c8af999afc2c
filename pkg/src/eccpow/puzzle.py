"""ECC puzzle: nonce -> hash vector -> decoder output, with solve and verify."""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import islice
from typing import Iterable, Iterator

import numpy as np

from . import _prng
from .decoder import DecoderOutput, DecoderParams, decode, decode_batch
from .exceptions import HeaderError, ParameterError
from .headerchain.header import BlockHeader, ChainConfig, serialize_header
from .hvg import bits_from_serialized, digest_chain
from .pcm import ParityCheckMatrix, build_pcm

NONCE_SPACE = 1 << 32


@dataclass(frozen=True, eq=False)
class PuzzleSolution:
    nonce: int
    word: np.ndarray
    cycles_spent: int


def _check_consistent(template: BlockHeader, H: ParityCheckMatrix) -> None:
    if (template.n, template.w_c, template.w_r) != (H.n, H.w_c, H.w_r):
        raise ParameterError(
            f"header code parameters {(template.n, template.w_c, template.w_r)} "
            f"do not match the matrix {(H.n, H.w_c, H.w_r)}"
        )


def hash_vectors(template: BlockHeader, nonces: Iterable[int]) -> np.ndarray:
    """Hash vectors for many nonces of one template, shape ``(len(nonces), n)``."""
    prefix = serialize_header(template)[:84]
    n = template.n
    segments = -(-n // 256)
    sha = hashlib.sha256
    raw = b"".join(
        digest_chain(sha(prefix + nonce.to_bytes(4, "big")).digest(), segments) for nonce in nonces
    )
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(-1, 32 * segments), axis=1)
    return np.ascontiguousarray(bits[:, :n])


def hash_cycle(template: BlockHeader, nonce: int, H: ParityCheckMatrix,
               params: DecoderParams = DecoderParams()) -> DecoderOutput:
    """One hash cycle: header with ``nonce`` -> hash vector -> decoder."""
    header = template.with_nonce(nonce)
    r = bits_from_serialized(serialize_header(header), header.n)
    return decode(H, r, params)


def eccpgf(template: BlockHeader, nonce: int, H: ParityCheckMatrix,
           params: DecoderParams = DecoderParams()) -> np.ndarray:
    _check_consistent(template, H)
    return hash_cycle(template, nonce, H, params).word


def evaluate_nonces(template: BlockHeader, nonces: list[int], H: ParityCheckMatrix,
                    params: DecoderParams = DecoderParams()):
    """Batched hash cycles; returns ``(words, converged, iterations)``."""
    if not nonces:
        return (np.zeros((0, H.n), np.uint8), np.zeros(0, bool), np.zeros(0, np.int32))
    return decode_batch(H, hash_vectors(template, nonces), params)


def nonce_stream(order: str = "sequential", seed: int = 0, start: int = 0) -> Iterator[int]:
    """Nonce draw order.

    ``sequential`` walks ``start, start+1, ..., 2^32-1`` and stops.
    ``random`` draws uniformly (with replacement) from the SHA-256 counter
    stream of ``seed``; it stops after ``2^32`` draws.
    """
    if order == "sequential":
        return iter(range(start, NONCE_SPACE))
    if order == "random":
        return islice(_prng.words32(seed), NONCE_SPACE)
    raise ValueError(f"unknown nonce order {order!r}")


_worker_state: dict = {}


def _worker_init(template, H, params):
    _worker_state.update(template=template, H=H, params=params)


def _worker_eval(nonces):
    s = _worker_state
    _, converged, _ = evaluate_nonces(s["template"], nonces, s["H"], s["params"])
    return converged


def solve(
    template: BlockHeader,
    H: ParityCheckMatrix,
    params: DecoderParams = DecoderParams(),
    nonce_order: str = "sequential",
    budget: int = NONCE_SPACE,
    *,
    seed: int = 0,
    start: int = 0,
    workers: int = 1,
    batch_size: int = 1,
) -> PuzzleSolution | None:
    """Search for a nonce whose decoder output is a codeword.

    Returns ``None`` when ``budget`` hash cycles (or the nonce space) are
    spent without success. With ``workers > 1`` each batch is split into
    disjoint strides across processes; the reported solution is always the
    earliest successful nonce in draw order, so the result does not depend
    on ``workers`` or ``batch_size``.
    """
    _check_consistent(template, H)
    if budget <= 0:
        return None
    nonces = nonce_stream(nonce_order, seed, start)
    spent = 0

    if workers <= 1 and batch_size <= 1:
        for nonce in nonces:
            if spent >= budget:
                return None
            spent += 1
            out = hash_cycle(template, nonce, H, params)
            if out.converged:
                return PuzzleSolution(nonce=nonce, word=out.word, cycles_spent=spent)
        return None

    batch = max(batch_size, workers)
    pool = None
    if workers > 1:
        pool = ProcessPoolExecutor(workers, initializer=_worker_init, initargs=(template, H, params))
    try:
        while spent < budget:
            chunk = list(islice(nonces, min(batch, budget - spent)))
            if not chunk:
                return None
            if pool is None:
                converged = evaluate_nonces(template, chunk, H, params)[1]
            else:
                converged = np.zeros(len(chunk), dtype=bool)
                parts = list(pool.map(_worker_eval, [chunk[w::workers] for w in range(workers)]))
                for w, part in enumerate(parts):
                    converged[w::workers] = part
            hits = np.flatnonzero(converged)
            if hits.size:
                i = int(hits[0])
                out = hash_cycle(template, chunk[i], H, params)
                return PuzzleSolution(nonce=chunk[i], word=out.word, cycles_spent=spent + i + 1)
            spent += len(chunk)
        return None
    finally:
        if pool is not None:
            pool.shutdown()


def refresh_template(template: BlockHeader, now: int | None = None,
                     merkle_root: bytes | None = None) -> BlockHeader:
    """Fresh template once a nonce range is exhausted: later timestamp, nonce reset."""
    if now is None:
        now = int(time.time())
    changes = {"timestamp": max(int(now), template.timestamp + 1), "nonce": 0}
    if merkle_root is not None:
        changes["merkle_root"] = merkle_root
    return replace(template, **changes)


@dataclass(frozen=True, eq=False)
class Verdict:
    valid: bool
    reason: str  # "ok", "invalid-header", "config-mismatch" or "puzzle-failed"
    output: DecoderOutput | None = None

    def __bool__(self):
        return self.valid


def verify_detailed(header: BlockHeader, cfg: ChainConfig) -> Verdict:
    """Rebuild H and r from the header alone and run the decoder once."""
    try:
        header.validate()
    except HeaderError:
        return Verdict(False, "invalid-header")
    if not cfg.admits(header.n, header.w_c, header.w_r):
        return Verdict(False, "config-mismatch")
    H = build_pcm(header.prev_hash, header.n, header.w_c, header.w_r)
    out = hash_cycle(header, header.nonce, H, cfg.decoder_params)
    return Verdict(out.converged, "ok" if out.converged else "puzzle-failed", out)


def verify(header: BlockHeader, cfg: ChainConfig) -> bool:
    return verify_detailed(header, cfg).valid
