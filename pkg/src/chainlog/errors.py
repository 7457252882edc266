"""Exception types shared across chainlog modules."""


class ChainlogError(Exception):
    """Base class for every error this package raises deliberately."""


class DuplicateStream(ChainlogError):
    """Stream name already exists."""


class UnknownStream(ChainlogError):
    """Stream was never created."""


class UnknownTxid(ChainlogError):
    """No confirmed transaction with that id."""


class UnknownNode(ChainlogError):
    """Node id outside the cluster."""


class MalformedTransaction(ChainlogError):
    """Transaction violates its invariants (empty items, txid mismatch, ...)."""


class CorruptChainFile(ChainlogError):
    """Persisted chain file cannot be parsed."""


class ParseError(ChainlogError):
    """Log line does not parse as a 7-field record."""


class MissingRoot(ChainlogError):
    """Normalization needs an original record that was never inserted."""


class InvalidRange(ChainlogError):
    """Timestamp range with start > end (or a negative bound)."""


class ParamsMismatch(ChainlogError):
    """Query-time timestamp-index params differ from the encoding params."""


class ConflictingPredicates(ChainlogError):
    """Same attribute constrained to two different values."""


class EmptyInput(ChainlogError):
    """An operation that needs a non-empty sample/workload got an empty one."""


class InvalidSpec(ChainlogError):
    """Synthetic corpus or benchmark scenario specification is inconsistent."""


class ConfigError(ChainlogError):
    """Bad key or value in a config / scenario file."""
