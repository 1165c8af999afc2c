from .header import (
    HEADER_SIZE,
    BlockHeader,
    ChainConfig,
    check_code_params,
    deserialize_header,
    header_hash,
    seed_from_prev_hash,
    serialize_header,
)
from .store import (
    Block,
    BlockReport,
    ChainReport,
    append_blocks,
    read_chain,
    validate_chain,
    write_chain,
)

__all__ = [
    "HEADER_SIZE",
    "Block",
    "BlockHeader",
    "BlockReport",
    "ChainConfig",
    "ChainReport",
    "append_blocks",
    "check_code_params",
    "deserialize_header",
    "header_hash",
    "read_chain",
    "seed_from_prev_hash",
    "serialize_header",
    "validate_chain",
    "write_chain",
]
