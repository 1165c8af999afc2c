import hashlib
import json
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import header_bytes
from eccpow.exceptions import ConfigError, HeaderError
from eccpow.headerchain import (
    HEADER_SIZE,
    Block,
    BlockHeader,
    ChainConfig,
    deserialize_header,
    header_hash,
    read_chain,
    seed_from_prev_hash,
    serialize_header,
    validate_chain,
    write_chain,
)
from eccpow.pcm import build_pcm
from eccpow.puzzle import solve
from eccpow.sim import simulate_chain

ZERO = bytes(32)


def zero_header(**kw):
    # all-zero fields are not a valid code, so layout checks use a valid (n, w_c, w_r)
    fields = dict(version=0, prev_hash=ZERO, merkle_root=ZERO, timestamp=0, n=24, w_c=3, w_r=6, nonce=0)
    fields.update(kw)
    return BlockHeader(**fields)


def test_layout_matches_oracle():
    h = BlockHeader(7, bytes(range(32)), bytes(range(32, 64)), 1_700_000_123, 48, 3, 6, 0xDEADBEEF)
    assert serialize_header(h) == header_bytes(7, bytes(range(32)), bytes(range(32, 64)),
                                               1_700_000_123, 48, 3, 6, 0xDEADBEEF)
    assert len(serialize_header(h)) == HEADER_SIZE


def test_layout_field_positions():
    base = serialize_header(zero_header())
    assert base[84:88] == b"\x00\x00\x00\x00"
    assert serialize_header(zero_header(nonce=1))[84:88] == b"\x00\x00\x00\x01"
    assert serialize_header(zero_header(version=2))[0:4] == b"\x00\x00\x00\x02"
    assert base[76:80] == (24).to_bytes(4, "big")
    assert base[80:82] == (3).to_bytes(2, "big") and base[82:84] == (6).to_bytes(2, "big")


def test_all_zero_header_layout_is_88_zero_bytes():
    # the all-zero field set is rejected by the invariants, but its layout is still 88 zeros
    assert header_bytes(0, ZERO, ZERO, 0, 0, 0, 0, 0) == bytes(88)
    with pytest.raises(HeaderError):
        serialize_header(BlockHeader(0, ZERO, ZERO, 0, 0, 0, 0, 0))


def test_header_hash_is_sha256_of_bytes():
    h = zero_header(nonce=5)
    assert header_hash(h) == hashlib.sha256(serialize_header(h)).digest()
    assert header_hash(h) != header_hash(h.with_nonce(6))


def test_roundtrip_deserialize():
    h = zero_header(nonce=99, timestamp=12345)
    assert deserialize_header(serialize_header(h)) == h
    with pytest.raises(HeaderError):
        deserialize_header(b"\x00" * 87)


@pytest.mark.parametrize("n,w_c,w_r", [(24, 2, 6), (24, 6, 6), (25, 3, 6), (4, 3, 6), (8196, 3, 6)])
def test_invariant_violations_rejected(n, w_c, w_r):
    with pytest.raises(HeaderError):
        serialize_header(zero_header(n=n, w_c=w_c, w_r=w_r))


@pytest.mark.parametrize("field,value", [("nonce", 2 ** 32), ("version", -1), ("w_c", 2 ** 16),
                                          ("timestamp", 2 ** 64)])
def test_field_width_checked(field, value):
    with pytest.raises(HeaderError):
        zero_header(**{field: value})


def test_prev_hash_length_checked():
    with pytest.raises(HeaderError):
        zero_header(prev_hash=bytes(31))


@pytest.mark.parametrize("digest,expected", [(bytes(32), 0), (b"\x01" * 32, 32), (b"\xff" * 32, 8160)])
def test_seed_examples(digest, expected):
    assert seed_from_prev_hash(digest) == expected


@given(st.binary(min_size=32, max_size=32), st.randoms())
def test_seed_invariant_under_byte_permutation(digest, r):
    shuffled = bytearray(digest)
    r.shuffle(shuffled)
    assert seed_from_prev_hash(bytes(shuffled)) == seed_from_prev_hash(digest)
    assert 0 <= seed_from_prev_hash(digest) <= 8160


headers = st.builds(
    BlockHeader,
    version=st.integers(0, 2 ** 32 - 1),
    prev_hash=st.binary(min_size=32, max_size=32),
    merkle_root=st.binary(min_size=32, max_size=32),
    timestamp=st.integers(0, 2 ** 64 - 1),
    n=st.sampled_from([24, 36, 48, 120]),
    w_c=st.just(3),
    w_r=st.just(6),
    nonce=st.integers(0, 2 ** 32 - 1),
)


@settings(max_examples=200)
@given(headers, st.sampled_from(["version", "prev_hash", "merkle_root", "timestamp", "n", "nonce"]), st.data())
def test_serialization_injective_under_field_perturbation(h, field, data):
    if field in ("prev_hash", "merkle_root"):
        new = data.draw(st.binary(min_size=32, max_size=32).filter(lambda b: b != getattr(h, field)))
    elif field == "n":
        new = data.draw(st.sampled_from([v for v in (24, 36, 48, 120) if v != h.n]))
    else:
        limit = {"version": 2 ** 32, "timestamp": 2 ** 64, "nonce": 2 ** 32}[field]
        new = data.draw(st.integers(0, limit - 1).filter(lambda v: v != getattr(h, field)))
    assert serialize_header(replace(h, **{field: new})) != serialize_header(h)


# -- config ------------------------------------------------------------------

def test_config_roundtrip(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    cfg.save(path)
    assert ChainConfig.load(path) == cfg
    assert set(json.loads(path.read_text())) == set(cfg.to_dict())


def test_config_rejects_bad_values(tmp_path):
    with pytest.raises(ConfigError):
        ChainConfig(difficulty_levels=(25,))
    with pytest.raises(ConfigError):
        ChainConfig(epsilon_num=1, epsilon_den=2)
    d = ChainConfig().to_dict()
    d["extra"] = 1
    with pytest.raises(ConfigError):
        ChainConfig.from_dict(d)
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        ChainConfig.load(tmp_path / "bad.json")


def test_decoder_params_follow_config():
    p = ChainConfig(max_iter=7, epsilon_num=1, epsilon_den=5, llr_scale=4).decoder_params
    assert (p.max_iter, p.llr_scale) == (7, 4) and p.epsilon == Fraction(1, 5)


# -- chain store and validation ----------------------------------------------

@pytest.fixture(scope="module")
def small_chain():
    return simulate_chain(ChainConfig(), 6, M=1, seed=11).blocks


def test_empty_chain_valid(cfg):
    assert validate_chain([], cfg).valid


def test_genesis_plus_one_valid(cfg):
    params = cfg.decoder_params
    blocks = []
    prev = ZERO
    for height in range(2):
        t = BlockHeader(1, prev, hashlib.sha256(bytes([height])).digest(), 1_700_000_000 + height, 24, 3, 6)
        sol = solve(t, build_pcm(prev, 24, 3, 6), params)
        blocks.append(Block(t.with_nonce(sol.nonce), height, sol.word))
        prev = header_hash(blocks[-1].header)
    assert validate_chain(blocks, cfg).valid
    broken = [blocks[0], Block(replace(blocks[1].header, prev_hash=ZERO), 1, blocks[1].solution_word)]
    # zeroing block 1's prev_hash breaks linkage (genesis hash is not zero)
    report = validate_chain(broken, cfg)
    assert not report.valid and not report.blocks[1].linkage_ok
    assert any("prev_hash" in d for d in report.blocks[1].diagnostics)


def test_file_roundtrip(tmp_path, small_chain, cfg):
    path = tmp_path / "chain.jsonl"
    write_chain(path, small_chain)
    loaded = read_chain(path)
    assert [b.header for b in loaded] == [b.header for b in small_chain]
    assert all(np.array_equal(a.solution_word, b.solution_word) for a, b in zip(loaded, small_chain))
    rec = json.loads(path.read_text().splitlines()[0])
    assert set(rec) == {"height", "version", "prev_hash", "merkle_root", "timestamp", "n", "wc", "wr",
                        "nonce", "solution_word"}
    assert validate_chain(loaded, cfg).valid


def test_single_bit_flip_of_any_header_invalidates(small_chain, cfg):
    # flip one serialized bit in every non-tip block at a spread of positions
    for i, block in enumerate(small_chain[:-1]):
        raw = bytearray(serialize_header(block.header))
        for bit in range(0, HEADER_SIZE * 8, 37):
            flipped = bytearray(raw)
            flipped[bit // 8] ^= 0x80 >> (bit % 8)
            try:
                h = deserialize_header(bytes(flipped))
            except HeaderError:
                continue
            blocks = list(small_chain)
            blocks[i] = Block(h, block.height, block.solution_word)
            assert not validate_chain(blocks, cfg).valid


def test_tampered_solution_word_reported(small_chain, cfg):
    b = small_chain[2]
    word = b.solution_word.copy()
    word[0] ^= 1
    blocks = list(small_chain)
    blocks[2] = Block(b.header, b.height, word)
    report = validate_chain(blocks, cfg)
    assert not report.blocks[2].word_ok and report.blocks[2].puzzle_ok


def test_decreasing_timestamp_is_only_a_warning(cfg):
    # build a chain whose timestamps go backwards; it stays valid
    params = cfg.decoder_params
    blocks, prev = [], ZERO
    for height, ts in enumerate([1_700_000_100, 1_700_000_000]):
        t = BlockHeader(1, prev, ZERO, ts, 24, 3, 6)
        sol = solve(t, build_pcm(prev, 24, 3, 6), params)
        blocks.append(Block(t.with_nonce(sol.nonce), height, sol.word))
        prev = header_hash(blocks[-1].header)
    report = validate_chain(blocks, cfg)
    assert report.valid and report.blocks[1].warnings


def test_height_and_config_checks(small_chain):
    blocks = list(small_chain)
    blocks[3] = Block(blocks[3].header, 7, blocks[3].solution_word)
    assert not validate_chain(blocks, ChainConfig()).valid
    assert not validate_chain(small_chain, ChainConfig(difficulty_levels=(36,))).valid
