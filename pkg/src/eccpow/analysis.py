"""Decoding-success probability, its bounds, and first-success hash-cycle statistics.

Bound arithmetic is exact (big integers and ``Fraction``) until a value is
rendered; FSHC moments use mpmath so that ``(1 - p)^M`` neither underflows
nor rounds the mean to exactly 1 for large ``M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import mpmath
import numpy as np
from scipy import stats

from .decoder import DecoderParams, decode_batch
from .exceptions import InsufficientSamplesError, ParameterError
from .pcm import _as_dense

# Upper bounds on the relative minimum distance of (w_c, w_r)-regular codes,
# taken from the asymptotic tables of Ben-Haim and Litsyn. Input data only.
DELTA1_TABLE: dict[tuple[int, int], Fraction] = {
    (4, 5): Fraction("0.3238"),
    (4, 8): Fraction("0.1765"),
}

# Printed lower bounds on E[X_M] for w_c=4, w_r=5, delta1=0.3238: (n, k) -> {M: value}
TABLE7_PRINTED: dict[tuple[int, int], dict[int, float]] = {
    (80, 12): {1: 1.58e4, 5: 0.31e4, 20: 0.08e4},
    (120, 24): {1: 6.03e7, 5: 1.20e7, 20: 0.30e7},
    (160, 32): {1: 2.46e9, 5: 0.49e9, 20: 0.12e9},
}


def _exact(x) -> Fraction:
    """Fraction from an int, Fraction, or decimal-looking float (via its repr)."""
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(repr(float(x)))


@dataclass(frozen=True)
class CodePoint:
    n: int
    k: int
    w_c: int
    w_r: int
    delta1: Fraction

    def __post_init__(self):
        object.__setattr__(self, "delta1", _exact(self.delta1))
        if not 0 < self.alpha < 1:
            raise ParameterError("w_c / w_r must lie in (0, 1)")
        if not 0 < self.delta1 < Fraction(1, 2):
            raise ParameterError("delta1 must lie in (0, 1/2)")

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.w_c, self.w_r)

    @classmethod
    def from_degrees(cls, n: int, w_c: int, w_r: int, k: int | None = None,
                     delta1=None) -> "CodePoint":
        """Code point with ``k = n - n*w_c/w_r`` and tabulated ``delta1`` unless given."""
        if k is None:
            k = n - n * w_c // w_r
        if delta1 is None:
            try:
                delta1 = DELTA1_TABLE[(w_c, w_r)]
            except KeyError:
                raise ParameterError(f"no tabulated delta1 for (w_c, w_r) = ({w_c}, {w_r})") from None
        return cls(n=n, k=k, w_c=w_c, w_r=w_r, delta1=delta1)


def binary_entropy(x) -> float:
    """``H(x) = -x log2 x - (1-x) log2(1-x)`` with ``H(0) = H(1) = 0``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy is defined on [0, 1], got {x}")
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def ball_volume(n: int, radius: int) -> int:
    """Number of binary words within Hamming distance ``radius`` of a fixed word."""
    return sum(math.comb(n, l) for l in range(0, min(radius, n) + 1))


def ds_probability_optimal(n: int, k: int, d: int) -> Fraction:
    """Success probability of a decoder that corrects exactly ``floor((d-1)/2)`` errors."""
    if not 1 <= d <= n or not 0 <= k <= n:
        raise ParameterError(f"need 1 <= d <= n and 0 <= k <= n, got n={n}, k={k}, d={d}")
    return Fraction(ball_volume(n, (d - 1) // 2), 2 ** (n - k))


@dataclass(frozen=True)
class Prop1Bounds:
    lower: float
    upper: float
    lower_log2: float
    upper_log2: float


def prop1_bounds(n: int, alpha, delta) -> Prop1Bounds:
    """``2^(-n alpha) <= p <= 2^(-n (alpha - H(delta/2)))``."""
    alpha, delta = float(alpha), float(delta)
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in (0, 1)")
    if not 0 < delta < 0.5:
        raise ParameterError("delta must lie in (0, 1/2)")
    lo = -n * alpha
    hi = -n * (alpha - binary_entropy(delta / 2))
    return Prop1Bounds(lower=2.0 ** lo, upper=2.0 ** hi, lower_log2=lo, upper_log2=hi)


def entropy_sum_holds(n: int, k: int) -> bool:
    """Exact check of ``sum_{l<=k} C(n,l) <= 2^(n H(k/n))``.

    ``2^(n H(k/n)) = n^n / (k^k (n-k)^(n-k))``, so the comparison is done
    entirely in integers.
    """
    if not 1 <= k <= n:
        raise ParameterError("need 1 <= k <= n")
    return ball_volume(n, k) * k ** k * (n - k) ** (n - k) <= n ** n


def entropy_inequality_grid(max_n: int = 64) -> list[tuple[int, int]]:
    """All ``(n, k)`` with ``1 <= k <= n/2``, ``n <= max_n`` violating the inequality."""
    return [(n, k) for n in range(2, max_n + 1) for k in range(1, n // 2 + 1)
            if not entropy_sum_holds(n, k)]


def g_bound(n: int, k: int, delta1) -> Fraction:
    """Optimal-decoder success probability with the distance replaced by ``floor(n*delta1)``."""
    delta1 = _exact(delta1)
    if not 0 < delta1 < 1:
        raise ParameterError("delta1 must lie in (0, 1)")
    d = math.floor(n * delta1)
    if d < 1:
        raise ParameterError(f"floor(n*delta1) = {d} must be at least 1")
    if not 0 <= k <= n:
        raise ParameterError("need 0 <= k <= n")
    return Fraction(ball_volume(n, (d - 1) // 2), 2 ** (n - k))


def fshc_lower_bound(n: int, k: int, delta1, M: int) -> Fraction:
    """Lower bound ``1 / (1 - (1 - g)^M)`` on the expected FSHC with ``M`` miners."""
    if M < 1:
        raise ParameterError("M must be at least 1")
    g = min(g_bound(n, k, delta1), Fraction(1))  # p <= 1 always
    return 1 / (1 - (1 - g) ** M)


@dataclass(frozen=True)
class FshcStats:
    """Geometric law of the first success hash cycle; moments are mpmath numbers."""

    p: float
    M: int
    p_fa: mpmath.mpf
    mean: mpmath.mpf
    variance: mpmath.mpf

    def pmf(self, l: int) -> mpmath.mpf:
        if l < 1:
            return mpmath.mpf(0)
        return self.p_fa ** (l - 1) * (1 - self.p_fa)


def fshc_stats(p, M: int) -> FshcStats:
    if M < 1:
        raise ParameterError("M must be at least 1")
    if p == 0:
        raise ParameterError("p = 0: the first success never occurs and the mean is undefined")
    if not 0 < p <= 1:
        raise ParameterError("p must lie in (0, 1]")
    fail = 1 - float(p)
    # enough bits to resolve mean - 1 = p_fa / (1 - p_fa) next to 1
    bits = 96 if fail == 0 else 96 + math.ceil(-M * math.log2(fail))
    with mpmath.workprec(bits):
        if isinstance(p, Rational):
            p_mp = mpmath.mpf(p.numerator) / p.denominator
        else:
            p_mp = mpmath.mpf(p)
        p_fa = (1 - p_mp) ** M
        success = 1 - p_fa
        mean = 1 / success
        variance = p_fa / success ** 2
    return FshcStats(p=float(p), M=M, p_fa=p_fa, mean=mean, variance=variance)


@dataclass(frozen=True)
class PEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    successes: int
    trials: int

    @property
    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2


def _enumerate_words(n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.uint64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return ((idx[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)


def estimate_p(H, params: DecoderParams = DecoderParams(), trials: int | None = 100_000,
               seed: int = 0, *, exhaustive: bool = False, chunk: int = 1 << 16) -> PEstimate:
    """Fraction of uniformly random received words on which the decoder converges.

    With ``exhaustive=True`` all ``2^n`` words are decoded once and the
    estimate is the exact success fraction of the real decoder.
    """
    n = _as_dense(H).shape[1]
    successes = 0
    if exhaustive:
        if n > 24:
            raise ParameterError("exhaustive estimation is limited to n <= 24")
        total = 1 << n
        for start in range(0, total, chunk):
            words = _enumerate_words(n, start, min(start + chunk, total))
            successes += int(decode_batch(H, words, params)[1].sum())
    else:
        if trials is None or trials < 1:
            raise ParameterError("trials must be positive")
        total = trials
        rng = np.random.default_rng(seed)
        for start in range(0, total, chunk):
            size = min(chunk, total - start)
            words = rng.integers(0, 2, size=(size, n), dtype=np.uint8)
            successes += int(decode_batch(H, words, params)[1].sum())
    ci = stats.binomtest(successes, total).proportion_ci(0.95, method="wilson")
    return PEstimate(p_hat=successes / total, ci_low=float(ci.low), ci_high=float(ci.high),
                     successes=successes, trials=total)


@dataclass(frozen=True)
class GofResult:
    statistic: float
    p_value: float
    dof: int
    rate: float
    bins: int


def geometric_gof(samples) -> GofResult:
    """Chi-square fit of samples to a geometric law on {1, 2, ...} with rate ``1/mean``.

    Single-value bins run from 1 upward while both the bin and the remaining
    tail expect at least 5 counts; everything beyond is one pooled tail bin.
    """
    x = np.asarray(samples, dtype=np.int64)
    if x.ndim != 1 or x.size < 100:
        raise InsufficientSamplesError("geometric_gof needs at least 100 samples")
    if x.min() < 1:
        raise ValueError("geometric samples must be >= 1")
    N = x.size
    rate = N / float(x.sum())
    fail = 1.0 - rate
    if fail <= 0.0:
        return GofResult(statistic=0.0, p_value=1.0, dof=0, rate=1.0, bins=1)

    expected, observed = [], []
    l = 1
    while True:
        e_l = N * fail ** (l - 1) * rate
        tail_after = N * fail ** l
        if e_l >= 5 and tail_after >= 5:
            expected.append(e_l)
            observed.append(int(np.count_nonzero(x == l)))
            l += 1
        else:
            break
    expected.append(N * fail ** (l - 1))
    observed.append(int(np.count_nonzero(x >= l)))
    dof = len(expected) - 2
    if dof < 1:
        return GofResult(statistic=0.0, p_value=1.0, dof=0, rate=rate, bins=len(expected))
    exp = np.asarray(expected)
    obs = np.asarray(observed, dtype=float)
    statistic = float(((obs - exp) ** 2 / exp).sum())
    p_value = float(stats.chi2.sf(statistic, dof))
    return GofResult(statistic=statistic, p_value=p_value, dof=dof, rate=rate, bins=len(expected))


def block_time(tau, expected_cycles, m, n, c=1.0) -> float:
    """Expected seconds per block: cycles times ``c*m*n`` operations at ``tau`` ops/s."""
    values = (tau, expected_cycles, m, n, c)
    if any(float(v) <= 0 for v in values):
        raise ParameterError("block_time arguments must be positive")
    return float(expected_cycles) * float(c) * m * n / float(tau)


@dataclass(frozen=True)
class Table7Row:
    n: int
    k: int
    M: int
    bound: Fraction
    printed: float | None

    @property
    def rel_error(self) -> float | None:
        if self.printed is None:
            return None
        return float(self.bound) / self.printed - 1.0


def reproduce_table7(w_c: int = 4, w_r: int = 5, delta1=Fraction("0.3238"),
                     ks: str = "printed", miners=(1, 5, 20)) -> list[Table7Row]:
    """Recompute the FSHC lower bounds for n = 80, 120, 160.

    ``ks="printed"`` uses the printed (n, k) pairs; ``ks="degree"`` uses
    ``k = n - n*w_c/w_r``.
    """
    rows = []
    for (n, k_printed), printed in TABLE7_PRINTED.items():
        k = k_printed if ks == "printed" else n - n * w_c // w_r
        for M in miners:
            ref = printed.get(M) if (ks == "printed" and (w_c, w_r) == (4, 5)) else None
            rows.append(Table7Row(n=n, k=k, M=M, bound=fshc_lower_bound(n, k, delta1, M), printed=ref))
    return rows
