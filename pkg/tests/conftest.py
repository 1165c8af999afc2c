import sys
import random

import pytest

from eccpow.headerchain import BlockHeader, ChainConfig


@pytest.fixture
def cfg():
    return ChainConfig()


@pytest.fixture
def rng():
    return random.Random(20240101)


def make_template(rng, n=24, w_c=3, w_r=6, prev_hash=None):
    return BlockHeader(
        version=1,
        prev_hash=prev_hash if prev_hash is not None else rng.randbytes(32),
        merkle_root=rng.randbytes(32),
        timestamp=1_700_000_000 + rng.randrange(10 ** 6),
        n=n,
        w_c=w_c,
        w_r=w_r,
    )


@pytest.fixture
def template(rng):
    return make_template(rng)



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
