"""Exception hierarchy shared by all eccpow modules."""


class EccPowError(Exception):
    """Base class for every error raised by this package."""


class HeaderError(EccPowError, ValueError):
    """A block header violates a field width or a protocol invariant."""


class ConfigError(EccPowError, ValueError):
    """A chain configuration is malformed or inconsistent."""


class ParameterError(EccPowError, ValueError):
    """Code parameters (n, w_c, w_r, ...) are inadmissible."""


class DegenerateCodeError(EccPowError, ValueError):
    """The code has dimension zero: its only codeword is the zero word."""


class CapacityError(EccPowError, ValueError):
    """An exhaustive computation would exceed its enumeration bound."""


class DecoderInputError(EccPowError, ValueError):
    """Decoder input does not match the parity-check matrix."""


class InsufficientSamplesError(EccPowError, ValueError):
    """Too few samples for a statistical test."""
