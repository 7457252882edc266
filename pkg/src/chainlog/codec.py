"""Log-record parsing and record <-> transaction conversion.

A record line has 7 whitespace-separated fields: Timestamp, Node, ID,
Ref-ID, User, Activity, Resource. Two encodings exist:

* baseline - 7 items, one per field; key = the field value, value = the
  whole record line. Any single item is enough to rebuild the record.
* enhanced - same keys but empty values, plus one item per coarse index
  level ("L0".."L{L-2}", key = bucket start). The record is rebuilt from
  the item keys. With ref normalization on, follow-up records (ref_id !=
  id) drop their User/Resource items; rebuilding copies both fields from
  the original record the Ref-ID points at.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .errors import MalformedTransaction, MissingRoot, ParseError
from .ledger import StreamItem, Transaction, make_transaction
from .tsindex import TsIndexParams, bucket_keys

FIELD_NAMES = ("Timestamp", "Node", "ID", "Ref-ID", "User", "Activity", "Resource")

BASELINE = "baseline"
ENHANCED = "enhanced"

_FIELD_ATTR = {
    "Timestamp": "timestamp",
    "Node": "node",
    "ID": "id",
    "Ref-ID": "ref_id",
    "User": "user",
    "Activity": "activity",
    "Resource": "resource",
}


@dataclass(frozen=True)
class LogRecord:
    timestamp: int
    node: str
    id: str
    ref_id: str
    user: str
    activity: str
    resource: str

    @property
    def is_root(self) -> bool:
        """True for original requests (later records may point back via Ref-ID)."""
        return self.ref_id == self.id


def field_value(record: LogRecord, attribute: str) -> str:
    """A record field as its canonical text (the stream key text)."""
    if attribute == "Timestamp":
        return str(record.timestamp)
    try:
        return getattr(record, _FIELD_ATTR[attribute])
    except KeyError:
        raise ValueError(f"unknown attribute {attribute!r}") from None


def record_line(record: LogRecord) -> str:
    """Canonical 7-field output line."""
    return " ".join(field_value(record, name) for name in FIELD_NAMES)


def parse_log_line(line: str) -> LogRecord:
    fields = line.split()
    if len(fields) != 7:
        raise ParseError(f"expected 7 fields, got {len(fields)}")
    ts = fields[0]
    if not (ts.isascii() and ts.isdigit()):
        raise ParseError(f"timestamp {ts!r} is not an unsigned decimal integer")
    return LogRecord(int(ts), *fields[1:])


@dataclass(frozen=True)
class EncodingMode:
    """How records were laid out on chain; queries must use the same mode."""

    mode: str
    normalize: bool = False
    ts_params: Optional[TsIndexParams] = None

    def __post_init__(self):
        if self.mode not in (BASELINE, ENHANCED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == ENHANCED and self.ts_params is None:
            raise ValueError("enhanced mode needs ts_params")
        if self.normalize and self.mode != ENHANCED:
            raise ValueError("normalization only applies to the enhanced encoding")

    @classmethod
    def baseline(cls) -> "EncodingMode":
        return cls(BASELINE)

    @classmethod
    def enhanced(cls, ts_params: TsIndexParams, normalize: bool = False) -> "EncodingMode":
        return cls(ENHANCED, normalize, ts_params)

    @property
    def stream_names(self) -> tuple[str, ...]:
        """Every stream this encoding publishes to."""
        if self.mode == BASELINE:
            return FIELD_NAMES
        return FIELD_NAMES + self.ts_params.extra_streams


RootLookup = Callable[[str], Optional[LogRecord]]


def encode_baseline(record: LogRecord, publisher: int = 0) -> Transaction:
    """One item per field; every value duplicates the whole record line."""
    line = record_line(record).encode("utf-8")
    items = [
        StreamItem(name, field_value(record, name).encode("utf-8"), line)
        for name in FIELD_NAMES
    ]
    return make_transaction(items, publisher)


def encode_enhanced(
    record: LogRecord,
    params: TsIndexParams,
    normalize: bool = False,
    root_lookup: RootLookup | None = None,
    publisher: int = 0,
) -> Transaction:
    """Empty-value items keyed by field values plus coarse bucket keys."""
    drop = ()
    if normalize and not record.is_root:
        root = root_lookup(record.ref_id) if root_lookup is not None else None
        if root is None:
            raise MissingRoot(f"no original record with ID {record.ref_id!r}")
        drop = ("User", "Resource")
    items = [
        StreamItem(name, field_value(record, name).encode("utf-8"), b"")
        for name in FIELD_NAMES
        if name not in drop
    ]
    # coarse levels only; the exact timestamp already lives in the Timestamp stream
    for level, bucket_start in bucket_keys(record.timestamp, params)[:-1]:
        items.append(StreamItem(f"L{level}", str(bucket_start).encode("utf-8"), b""))
    return make_transaction(items, publisher)


def rebuild_record(
    tx: Transaction,
    mode: EncodingMode,
    root_lookup: RootLookup | None = None,
) -> LogRecord:
    """Inverse of the encoder that produced tx."""
    if mode.mode == BASELINE:
        return parse_log_line(tx.items[0].value.decode("utf-8"))

    keys: dict[str, str] = {}
    for item in tx.items:
        if item.stream in _FIELD_ATTR and item.stream not in keys:
            keys[item.stream] = item.key.decode("utf-8")
    for name in ("Timestamp", "Node", "ID", "Ref-ID", "Activity"):
        if name not in keys:
            raise MalformedTransaction(f"enhanced transaction lacks a {name} item")
    ts = keys["Timestamp"]
    if not (ts.isascii() and ts.isdigit()):
        raise MalformedTransaction(f"bad timestamp key {ts!r}")

    user, resource = keys.get("User"), keys.get("Resource")
    if user is None or resource is None:
        ref_id = keys["Ref-ID"]
        root = root_lookup(ref_id) if root_lookup is not None else None
        if root is None:
            raise MissingRoot(f"no original record with ID {ref_id!r}")
        user = root.user if user is None else user
        resource = root.resource if resource is None else resource
    return LogRecord(int(ts), keys["Node"], keys["ID"], keys["Ref-ID"],
                     user, keys["Activity"], resource)
