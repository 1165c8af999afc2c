"""Proof-of-work built on a time-variant LDPC decoding puzzle.

The parity-check matrix of every block is derived from the previous block
hash; a nonce solves the puzzle when a quantized min-sum decoder maps the
header's hash vector to a codeword.
"""

from .decoder import DecoderOutput, DecoderParams, decode, decode_batch, is_codeword
from .exceptions import EccPowError
from .headerchain import BlockHeader, ChainConfig, header_hash, serialize_header
from .hvg import HashVector, build_hash_vector
from .pcm import ParityCheckMatrix, build_pcm, derive_generator
from .puzzle import PuzzleSolution, solve, verify

__version__ = "0.1.0"

__all__ = [
    "BlockHeader",
    "ChainConfig",
    "DecoderOutput",
    "DecoderParams",
    "EccPowError",
    "HashVector",
    "ParityCheckMatrix",
    "PuzzleSolution",
    "build_hash_vector",
    "build_pcm",
    "decode",
    "decode_batch",
    "derive_generator",
    "header_hash",
    "is_codeword",
    "serialize_header",
    "solve",
    "verify",
]
