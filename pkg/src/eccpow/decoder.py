"""Quantized min-sum message passing on the Tanner graph of a parity-check matrix.

Everything on the protocol path is integer arithmetic so that miners and
verifiers on any platform obtain bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction

import numpy as np

from ._jit import njit
from .exceptions import DecoderInputError
from .pcm import ParityCheckMatrix, _as_dense

SATURATION = 127


@dataclass(frozen=True)
class DecoderParams:
    max_iter: int = 20
    epsilon: Fraction = Fraction(1, 4)
    llr_scale: int = 8

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 0 < self.epsilon < Fraction(1, 2):
            raise ValueError("epsilon must lie strictly between 0 and 1/2")
        if self.llr_scale < 1:
            raise ValueError("llr_scale must be positive")

    @cached_property
    def channel_llr(self) -> int:
        """Integer channel magnitude ``round(llr_scale * ln((1-eps)/eps))``, saturated."""
        eps = self.epsilon
        value = self.llr_scale * math.log((1 - eps) / eps)
        return min(SATURATION, int(math.floor(value + 0.5)))


@dataclass(frozen=True, eq=False)
class DecoderOutput:
    word: np.ndarray
    converged: bool
    iterations_used: int


class TannerGraph:
    """CSR-style edge tables for a binary matrix.

    Edges are numbered row by row; ``edge_var[e]`` is the column of edge
    ``e``, row ``c`` owns edges ``row_ptr[c]:row_ptr[c+1]`` and column ``v``
    owns edges ``var_edge[var_ptr[v]:var_ptr[v+1]]``.
    """

    def __init__(self, n: int, rows):
        self.m, self.n = len(rows), n
        degrees = [len(r) for r in rows]
        self.edge_var = np.fromiter((c for r in rows for c in sorted(r)), dtype=np.int64,
                                    count=sum(degrees))
        self.E = len(self.edge_var)
        self.row_ptr = np.zeros(self.m + 1, dtype=np.int64)
        np.cumsum(degrees, out=self.row_ptr[1:])
        self.var_edge = np.argsort(self.edge_var, kind="stable").astype(np.int64)
        self.var_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.edge_var, minlength=n), out=self.var_ptr[1:])

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "TannerGraph":
        return cls(dense.shape[1], [np.flatnonzero(row).tolist() for row in dense])


def tanner_graph(H) -> TannerGraph:
    if isinstance(H, ParityCheckMatrix):
        g = H.__dict__.get("_tanner_graph")
        if g is None:
            g = TannerGraph(H.n, H.rows)
            object.__setattr__(H, "_tanner_graph", g)
        return g
    return TannerGraph.from_dense(_as_dense(H))


def _as_words(g: TannerGraph, words) -> np.ndarray:
    arr = np.asarray(words)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != g.n:
        raise DecoderInputError(f"expected words of length {g.n}, got shape {np.shape(words)}")
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise DecoderInputError("words must be binary")
    return np.ascontiguousarray(arr, dtype=np.uint8)


@njit(cache=True)
def _syndrome_ok(word, row_ptr, edge_var):
    m = row_ptr.shape[0] - 1
    for c in range(m):
        acc = 0
        for e in range(row_ptr[c], row_ptr[c + 1]):
            acc ^= word[edge_var[e]]
        if acc:
            return False
    return True


@njit(cache=True)
def _syndrome_batch(words, row_ptr, edge_var, out):
    for b in range(words.shape[0]):
        out[b] = _syndrome_ok(words[b], row_ptr, edge_var)


@njit(cache=True)
def _minsum_batch(R, row_ptr, edge_var, var_ptr, var_edge, L0, max_iter, sat,
                  words, converged, iterations):
    B, n = R.shape
    m = row_ptr.shape[0] - 1
    E = edge_var.shape[0]
    lch = np.empty(n, np.int32)
    total = np.empty(n, np.int32)
    q = np.empty(E, np.int32)
    r = np.empty(E, np.int32)
    bits = np.empty(n, np.uint8)
    for b in range(B):
        for j in range(n):
            words[b, j] = R[b, j]
        if _syndrome_ok(R[b], row_ptr, edge_var):
            converged[b] = True
            iterations[b] = 0
            continue
        for j in range(n):
            lch[j] = -L0 if R[b, j] else L0
        for e in range(E):
            q[e] = lch[edge_var[e]]
        converged[b] = False
        iterations[b] = max_iter
        for it in range(1, max_iter + 1):
            # check nodes: sign = product of the other signs, magnitude = min of the others
            for c in range(m):
                parity = 0
                min1 = sat
                min2 = sat
                arg = -1
                for e in range(row_ptr[c], row_ptr[c + 1]):
                    v = q[e]
                    if v < 0:
                        parity ^= 1
                        v = -v
                    if v < min1:
                        min2 = min1
                        min1 = v
                        arg = e
                    elif v < min2:
                        min2 = v
                for e in range(row_ptr[c], row_ptr[c + 1]):
                    mag = min2 if e == arg else min1
                    neg = parity ^ (1 if q[e] < 0 else 0)
                    r[e] = -mag if neg else mag
            # variable nodes; a zero total decides bit 0
            for j in range(n):
                acc = lch[j]
                for k in range(var_ptr[j], var_ptr[j + 1]):
                    acc += r[var_edge[k]]
                total[j] = acc
                bits[j] = 1 if acc < 0 else 0
            for e in range(E):
                v = total[edge_var[e]] - r[e]
                if v > sat:
                    v = sat
                elif v < -sat:
                    v = -sat
                q[e] = v
            for j in range(n):
                words[b, j] = bits[j]
            if _syndrome_ok(bits, row_ptr, edge_var):
                converged[b] = True
                iterations[b] = it
                break


def is_codeword(H, c) -> bool:
    """True iff every parity check of ``H`` is satisfied by ``c``."""
    g = tanner_graph(H)
    return bool(_syndrome_ok(_as_words(g, c)[0], g.row_ptr, g.edge_var))


def syndrome_ok_batch(H, words) -> np.ndarray:
    g = tanner_graph(H)
    W = _as_words(g, words)
    out = np.zeros(W.shape[0], dtype=np.bool_)
    _syndrome_batch(W, g.row_ptr, g.edge_var, out)
    return out


def decode_batch(H, R, params: DecoderParams = DecoderParams()):
    """Decode every row of ``R`` independently.

    Returns ``(words, converged, iterations)`` arrays. Row ``b`` of the result
    is exactly what :func:`decode` returns for ``R[b]``.
    """
    g = tanner_graph(H)
    R = _as_words(g, R)
    B = R.shape[0]
    words = np.empty_like(R)
    converged = np.zeros(B, dtype=np.bool_)
    iterations = np.zeros(B, dtype=np.int32)
    _minsum_batch(R, g.row_ptr, g.edge_var, g.var_ptr, g.var_edge,
                  params.channel_llr, params.max_iter, SATURATION,
                  words, converged, iterations)
    return words, converged, iterations


def decode(H, r, params: DecoderParams = DecoderParams()) -> DecoderOutput:
    """Run the decoder on one received word (or :class:`~eccpow.hvg.HashVector`).

    The syndrome of ``r`` is checked first, so a codeword comes back
    unchanged after zero iterations.
    """
    bits = getattr(r, "bits", r)
    g = tanner_graph(H)
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or arr.shape[0] != g.n:
        raise DecoderInputError(f"expected a word of length {g.n}, got shape {np.shape(bits)}")
    words, converged, iterations = decode_batch(H, arr[None, :], params)
    return DecoderOutput(word=words[0], converged=bool(converged[0]), iterations_used=int(iterations[0]))
