"""Mining games in lockstep logical rounds, batch experiments and chain growth."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _prng
from .analysis import GofResult, estimate_p, fshc_stats, geometric_gof
from .decoder import DecoderParams
from .headerchain.header import BlockHeader, ChainConfig, header_hash, seed_from_prev_hash
from .headerchain.store import Block
from .pcm import ParityCheckMatrix, build_pcm
from .puzzle import evaluate_nonces, nonce_stream, refresh_template

logger = logging.getLogger(__name__)

GENESIS_TIME = 1_700_000_000
_MAX_BATCH = 1 << 17


@dataclass(frozen=True, eq=False)
class GameResult:
    """Outcome of one mining game; ``fshc`` is None when the round cap was hit."""

    fshc: int | None
    winner: int | None = None
    nonce: int | None = None
    word: np.ndarray | None = None

    @property
    def overflowed(self) -> bool:
        return self.fshc is None


def miner_seed(rng_seed: int, miner: int) -> int:
    """Seed of miner ``miner``'s random nonce stream in a game seeded by ``rng_seed``."""
    return _prng.derive_seed(rng_seed, miner)


def run_games(H: ParityCheckMatrix, template: BlockHeader, M: int, params: DecoderParams,
              seeds: Sequence[int], max_rounds: int | None = None) -> list[GameResult]:
    """Play one game per seed.

    Every round each of the ``M`` miners draws its next nonce and runs one
    hash cycle. The game ends at the first round with any success; if
    several miners succeed in that round the lowest miner index wins.
    Rounds are evaluated in growing chunks across all unfinished games,
    which changes only speed, never outcomes.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    streams = [[nonce_stream("random", miner_seed(s, j)) for j in range(M)] for s in seeds]
    results: list[GameResult | None] = [None] * len(seeds)
    active = list(range(len(seeds)))
    done_rounds = 0
    chunk = 4
    while active:
        if max_rounds is not None:
            chunk = min(chunk, max_rounds - done_rounds)
            if chunk <= 0:
                for g in active:
                    results[g] = GameResult(fshc=None)
                break
        per_game = chunk * M
        group = max(1, _MAX_BATCH // per_game)
        still = []
        for lo in range(0, len(active), group):
            games = active[lo:lo + group]
            nonces = [next(streams[g][j]) for g in games for _ in range(chunk) for j in range(M)]
            words, converged, _ = evaluate_nonces(template, nonces, H, params)
            hits = converged.reshape(len(games), chunk, M)
            for gi, g in enumerate(games):
                rounds = np.flatnonzero(hits[gi].any(axis=1))
                if rounds.size == 0:
                    still.append(g)
                    continue
                r = int(rounds[0])
                j = int(np.argmax(hits[gi, r]))
                idx = (gi * chunk + r) * M + j
                results[g] = GameResult(fshc=done_rounds + r + 1, winner=j,
                                        nonce=nonces[idx], word=words[idx].copy())
        active = still
        done_rounds += chunk
        chunk = min(chunk * 2, 256)
    return results


def run_mining_game(H: ParityCheckMatrix, template: BlockHeader, M: int,
                    params: DecoderParams = DecoderParams(), rng_seed: int = 0,
                    max_rounds: int | None = None) -> GameResult:
    return run_games(H, template, M, params, [rng_seed], max_rounds)[0]


def experiment_template(cfg: ChainConfig, n: int, seed: int) -> BlockHeader:
    """Fixed header (sans nonce) shared by all miners of an experiment."""
    sb = _prng.seed_bytes(seed)
    return BlockHeader(
        version=1,
        prev_hash=hashlib.sha256(b"experiment-prev" + sb).digest(),
        merkle_root=hashlib.sha256(b"experiment-merkle" + sb).digest(),
        timestamp=GENESIS_TIME,
        n=n,
        w_c=cfg.w_c,
        w_r=cfg.w_r,
    )


@dataclass
class MiningGameReport:
    n: int
    w_c: int
    w_r: int
    M: int
    params: DecoderParams
    seed: int
    p_hat: float
    p_trials: int
    samples: list[int]
    overflowed: int
    gof: GofResult | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def variance(self) -> float:
        return float(np.var(self.samples, ddof=1))

    @property
    def std_error(self) -> float:
        return float(np.std(self.samples, ddof=1) / np.sqrt(len(self.samples)))

    @property
    def predicted_mean(self) -> float:
        return float(fshc_stats(self.p_hat, self.M).mean)

    def to_text(self) -> str:
        items = [
            ("n", self.n),
            ("wc", self.w_c),
            ("wr", self.w_r),
            ("M", self.M),
            ("max_iter", self.params.max_iter),
            ("epsilon", f"{self.params.epsilon.numerator}/{self.params.epsilon.denominator}"),
            ("llr_scale", self.params.llr_scale),
            ("seed", self.seed),
            ("games", len(self.samples)),
            ("overflowed", self.overflowed),
            ("p_hat", f"{self.p_hat:.6f}"),
            ("p_trials", self.p_trials),
            ("mean", f"{self.mean:.6f}"),
            ("variance", f"{self.variance:.6f}"),
            ("predicted_mean", f"{self.predicted_mean:.6f}"),
        ]
        if self.gof is not None:
            items += [
                ("gof_statistic", f"{self.gof.statistic:.6f}"),
                ("gof_dof", self.gof.dof),
                ("gof_p_value", f"{self.gof.p_value:.6f}"),
            ]
        return "".join(f"{k}={v}\n" for k, v in items)


def run_experiment(cfg: ChainConfig, games: int, M_list: Sequence[int], seed: int, *,
                   n: int | None = None, p_trials: int = 100_000,
                   max_rounds: int | None = None) -> list[MiningGameReport]:
    """Independent games for each miner count on one fixed (H, header) instance."""
    if games < 100:
        raise ValueError("an experiment needs at least 100 games")
    n = cfg.difficulty_levels[0] if n is None else n
    params = cfg.decoder_params
    template = experiment_template(cfg, n, seed)
    H = build_pcm(template.prev_hash, n, cfg.w_c, cfg.w_r)
    p_est = estimate_p(H, params, p_trials, seed=seed)
    reports = []
    for M in M_list:
        base = _prng.derive_seed(seed, 1_000_000 + M)
        seeds = [_prng.derive_seed(base, g) for g in range(games)]
        results = run_games(H, template, M, params, seeds, max_rounds)
        samples = [r.fshc for r in results if r.fshc is not None]
        rep = MiningGameReport(n=n, w_c=cfg.w_c, w_r=cfg.w_r, M=M, params=params, seed=seed,
                               p_hat=p_est.p_hat, p_trials=p_est.trials, samples=samples,
                               overflowed=len(results) - len(samples))
        if len(samples) >= 100:
            rep.gof = geometric_gof(samples)
        reports.append(rep)
    return reports


@dataclass(frozen=True)
class BlockRecord:
    height: int
    n: int
    fshc: int
    winner: int
    seed: int  # byte-sum seed of the prev_hash that shaped this block's H


@dataclass
class ChainSimulation:
    blocks: list[Block]
    records: list[BlockRecord]
    matrices: list[ParityCheckMatrix] = field(repr=False, default_factory=list)
    retargets: list[tuple[int, int, int]] = field(default_factory=list)  # (after height, old n, new n)
    seed_collisions: list[int] = field(default_factory=list)  # heights whose seed S repeats the previous block's


def next_level(level: int, window_mean: float, cfg: ChainConfig) -> int:
    """Difficulty-ladder step after a full retarget window."""
    if window_mean < 0.5 * cfg.target_block_seconds:
        return min(level + 1, len(cfg.difficulty_levels) - 1)
    if window_mean > 2.0 * cfg.target_block_seconds:
        return max(level - 1, 0)
    return level


def simulate_chain(cfg: ChainConfig, num_blocks: int, M: int = 1, seed: int = 0, *,
                   start_level: int = 0, max_rounds: int = 1 << 20) -> ChainSimulation:
    """Grow a chain block by block, each mined by an M-miner game.

    One logical round counts as one second; timestamps advance by the
    target block time. Every ``retarget_window`` blocks the mean round
    count of the window moves ``n`` one step along the difficulty ladder.
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be at least 1")
    params = cfg.decoder_params
    level = start_level
    sim = ChainSimulation(blocks=[], records=[])
    prev_hash = bytes(32)
    sb = _prng.seed_bytes(seed)
    for height in range(num_blocks):
        n = cfg.difficulty_levels[level]
        template = BlockHeader(
            version=1,
            prev_hash=prev_hash,
            merkle_root=hashlib.sha256(b"merkle" + sb + height.to_bytes(8, "big")).digest(),
            timestamp=GENESIS_TIME + height * cfg.target_block_seconds,
            n=n,
            w_c=cfg.w_c,
            w_r=cfg.w_r,
        )
        H = build_pcm(prev_hash, n, cfg.w_c, cfg.w_r)
        game_seed = _prng.derive_seed(seed, height)
        result = run_mining_game(H, template, M, params, game_seed, max_rounds)
        while result.overflowed:
            template = refresh_template(template, now=template.timestamp + 1)
            result = run_mining_game(H, template, M, params, game_seed, max_rounds)
        header = template.with_nonce(result.nonce)
        sim.blocks.append(Block(header=header, height=height, solution_word=result.word))
        S = seed_from_prev_hash(prev_hash)
        if sim.records and sim.records[-1].seed == S:
            sim.seed_collisions.append(height)
            logger.warning("block %d reuses seed S=%d of block %d", height, S, height - 1)
        sim.records.append(BlockRecord(height=height, n=n, fshc=result.fshc, winner=result.winner, seed=S))
        sim.matrices.append(H)
        prev_hash = header_hash(header)
        if (height + 1) % cfg.retarget_window == 0:
            window = sim.records[-cfg.retarget_window:]
            new_level = next_level(level, float(np.mean([r.fshc for r in window])), cfg)
            if new_level != level:
                sim.retargets.append((height, n, cfg.difficulty_levels[new_level]))
                logger.info("retarget after block %d: n %d -> %d", height, n, cfg.difficulty_levels[new_level])
            level = new_level
    return sim
