"""Seeded Gallager parity-check matrices and small-code analysis helpers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import _prng
from .exceptions import CapacityError, DegenerateCodeError, HeaderError, ParameterError
from .headerchain.header import check_code_params, seed_from_prev_hash

MAX_BRUTEFORCE_DIM = 20


@dataclass(frozen=True)
class ParityCheckMatrix:
    """Sparse regular binary matrix; ``rows[i]`` lists the columns holding a one."""

    n: int
    w_c: int
    w_r: int
    rows: tuple[tuple[int, ...], ...]
    source_seed: int | None = None

    def __post_init__(self):
        if self.n * self.w_c % self.w_r:
            raise ParameterError("n*w_c must be divisible by w_r")
        if len(self.rows) != self.m:
            raise ParameterError(f"expected {self.m} rows, got {len(self.rows)}")
        col_deg = [0] * self.n
        for row in self.rows:
            if len(row) != self.w_r or len(set(row)) != self.w_r:
                raise ParameterError("every row must hold exactly w_r distinct ones")
            for c in row:
                if not 0 <= c < self.n:
                    raise ParameterError(f"column index {c} out of range")
                col_deg[c] += 1
        if any(d != self.w_c for d in col_deg):
            raise ParameterError("every column must hold exactly w_c ones")

    @property
    def m(self) -> int:
        return self.n * self.w_c // self.w_r

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    @cached_property
    def dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, row in enumerate(self.rows):
            out[i, list(row)] = 1
        out.setflags(write=False)
        return out

    def to_dense(self) -> np.ndarray:
        return self.dense.copy()


def _as_dense(H) -> np.ndarray:
    if isinstance(H, ParityCheckMatrix):
        return H.dense
    arr = np.asarray(H, dtype=np.uint8) & 1
    if arr.ndim != 2:
        raise ParameterError("parity-check matrix must be two-dimensional")
    return arr


def base_matrix(n: int, w_r: int) -> np.ndarray:
    """``(n / w_r) x n`` matrix whose row i has ones in columns ``i*w_r .. (i+1)*w_r - 1``."""
    if w_r < 1 or n < 1 or n % w_r:
        raise ParameterError(f"w_r={w_r} must divide n={n}")
    A = np.zeros((n // w_r, n), dtype=np.uint8)
    for i in range(n // w_r):
        A[i, i * w_r:(i + 1) * w_r] = 1
    return A


def seeded_permutation(seed: int, n: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)`` driven by the SHA-256 counter stream.

    Position ``i`` runs from ``n-1`` down to 1 and is swapped with an index
    drawn uniformly from ``[0, i]`` by rejection sampling on 64-bit words.
    """
    if n < 1:
        raise ParameterError("permutation length must be positive")
    perm = list(range(n))
    words = _prng.words64(seed, prefetch=n - 1)
    for i in range(n - 1, 0, -1):
        j = _prng.uniform_below(words, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def build_pcm(prev_hash: bytes, n: int, w_c: int, w_r: int, *, cache: bool = True) -> ParityCheckMatrix:
    """Stack ``A`` and ``w_c - 1`` column permutations of it.

    Block ``i`` (1-based among the permuted blocks) uses seed ``S - i + 1``
    where ``S`` is the byte sum of ``prev_hash``. Column ``c`` of a permuted
    block is column ``perm[c]`` of ``A``.

    H depends on ``prev_hash`` only through ``S``, so results are memoized
    per ``(S, n, w_c, w_r)``; every block mined on the same parent shares
    one immutable matrix. ``cache=False`` forces a fresh construction.
    """
    try:
        check_code_params(n, w_c, w_r)
    except HeaderError as exc:
        raise ParameterError(str(exc)) from None
    S = seed_from_prev_hash(prev_hash)
    if cache:
        return _pcm_for_seed(S, n, w_c, w_r)
    return _construct(S, n, w_c, w_r)


def _construct(S: int, n: int, w_c: int, w_r: int) -> ParityCheckMatrix:
    rows_per_block = n // w_r
    # column c of A sits in row c // w_r
    rows: list[tuple[int, ...]] = [tuple(range(i * w_r, (i + 1) * w_r)) for i in range(rows_per_block)]
    for i in range(1, w_c):
        perm = seeded_permutation(S - i + 1, n)
        block: list[list[int]] = [[] for _ in range(rows_per_block)]
        for c, src in enumerate(perm):
            block[src // w_r].append(c)
        rows.extend(tuple(r) for r in block)
    return ParityCheckMatrix(n=n, w_c=w_c, w_r=w_r, rows=tuple(rows), source_seed=S)


_pcm_for_seed = lru_cache(maxsize=256)(_construct)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    matrix: np.ndarray  # n x k', columns form a basis of the null space
    rank: int
    rank_deficiency: int

    @property
    def k(self) -> int:
        return self.matrix.shape[1]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _row_ints(dense: np.ndarray) -> list[int]:
    packed = np.packbits(dense.astype(np.uint8), axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def gf2_rref(rows: list[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form over GF(2) on rows packed as ints (bit j = column j).

    Returns the nonzero reduced rows and their pivot columns.
    """
    rows = [r for r in rows if r]
    pivots: list[int] = []
    top = 0
    for col in range(ncols):
        bit = 1 << col
        for i in range(top, len(rows)):
            if rows[i] & bit:
                rows[top], rows[i] = rows[i], rows[top]
                break
        else:
            continue
        pivot_row = rows[top]
        for i in range(len(rows)):
            if i != top and rows[i] & bit:
                rows[i] ^= pivot_row
        pivots.append(col)
        top += 1
        if top == len(rows):
            break
    return rows[:top], pivots


def gf2_rank(H) -> int:
    dense = _as_dense(H)
    return len(gf2_rref(_row_ints(dense), dense.shape[1])[1])


def derive_generator(H) -> GeneratorMatrix:
    """Null-space basis of ``H`` over GF(2) by Gauss-Jordan elimination.

    Free columns become the message positions; each basis vector sets one
    free column and reads the pivot positions off the reduced rows.
    """
    dense = _as_dense(H)
    m, n = dense.shape
    if m == 0 or n == 0:
        raise ParameterError("parity-check matrix must be nonempty")
    reduced, pivots = gf2_rref(_row_ints(dense), n)
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    if not free:
        raise DegenerateCodeError("null space is {0}: the code has no nonzero codeword")
    G = np.zeros((n, len(free)), dtype=np.uint8)
    for j, f in enumerate(free):
        G[f, j] = 1
        fbit = 1 << f
        for row, p in zip(reduced, pivots):
            if row & fbit:
                G[p, j] = 1
    return GeneratorMatrix(matrix=G, rank=len(pivots), rank_deficiency=m - len(pivots))


def min_distance_bruteforce(H) -> int:
    """Minimum nonzero codeword weight by Gray-code enumeration of all ``2^k'`` messages."""
    gen = derive_generator(H)
    k = gen.k
    if k > MAX_BRUTEFORCE_DIM:
        raise CapacityError(f"code dimension {k} exceeds enumeration bound {MAX_BRUTEFORCE_DIM}")
    basis = _row_ints(gen.matrix.T)
    word = 0
    best = gen.n + 1
    for i in range(1, 1 << k):
        word ^= basis[(i & -i).bit_length() - 1]
        w = bin(word).count("1")
        if w < best:
            best = w
    return best


def correctable_errors(d: int) -> int:
    if d < 1:
        raise ValueError("minimum distance must be at least 1")
    return (d - 1) // 2
