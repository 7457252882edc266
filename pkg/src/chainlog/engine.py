"""Point, AND, and timestamp-range queries over a chain view.

Two pipelines exist, one per encoding. Baseline queries read records
straight out of item values. Enhanced queries collect TXIDs from the
stream index, fetch each transaction, and rebuild the record from item
keys; a range query first decomposes the interval into index buckets so it
issues one lookup per bucket instead of one per timestamp.

Every result carries api_calls, the number of store primitive invocations
(list_stream_key_items + get_raw_transaction) the query needed, and
peak_records, the largest record list held at any point while answering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import codec
from .codec import BASELINE, ENHANCED, EncodingMode, LogRecord
from .errors import ConflictingPredicates, EmptyInput, InvalidRange, ParamsMismatch
from .tsindex import TsIndexParams, decompose

FIELD_NAMES = codec.FIELD_NAMES
_FIELD_POS = {name: i for i, name in enumerate(FIELD_NAMES)}


@dataclass(frozen=True)
class Predicate:
    attribute: str
    value: bytes

    def __post_init__(self):
        if self.attribute not in _FIELD_POS:
            raise ValueError(f"unknown attribute {self.attribute!r}")

    @classmethod
    def of(cls, attribute: str, value) -> "Predicate":
        if isinstance(value, str):
            value = value.encode("utf-8")
        return cls(attribute, value)


@dataclass
class ResultSet:
    records: list[LogRecord]
    api_calls: int
    peak_records: int = 0

    def __post_init__(self):
        if self.peak_records < len(self.records):
            self.peak_records = len(self.records)

    def lines(self) -> list[str]:
        return [codec.record_line(r) for r in self.records]


@dataclass(frozen=True)
class SelectivityList:
    """Attributes ranked by expected result size, smallest (most selective) first."""

    ranking: tuple[str, ...]
    stats: dict[str, float] = field(default_factory=dict)

    def most_selective(self, attributes) -> str:
        return min(attributes, key=self.ranking.index)

    @classmethod
    def default(cls) -> "SelectivityList":
        return cls(FIELD_NAMES)


def build_selectivity_list(sample) -> SelectivityList:
    """Rank attributes by mean result size over a sample corpus.

    Mean size of an attribute = sample size / number of distinct values;
    ties fall back to the fixed field order.
    """
    sample = list(sample)
    if not sample:
        raise EmptyInput("selectivity list needs a non-empty sample")
    stats = {
        name: len(sample) / len({codec.field_value(r, name) for r in sample})
        for name in FIELD_NAMES
    }
    ranking = tuple(sorted(FIELD_NAMES, key=lambda a: (stats[a], _FIELD_POS[a])))
    return SelectivityList(ranking, stats)


class _Session:
    """Per-query state: the api-call counter and a txid -> record cache."""

    __slots__ = ("view", "calls", "records")

    def __init__(self, view):
        self.view = view
        self.calls = 0
        self.records: dict[bytes, LogRecord] = {}

    def list_items(self, stream: str, key: bytes):
        self.calls += 1
        return self.view.list_stream_key_items(stream, key)

    def fetch(self, stream: str, key: bytes, mode: EncodingMode) -> list[bytes]:
        """Enhanced lookup: list txids under (stream, key) and rebuild each."""
        txids = []
        lookup = self._root_lookup(mode) if mode.normalize else None
        for txid, _ in self.list_items(stream, key):
            if txid not in self.records:
                self.calls += 1
                tx = self.view.get_raw_transaction(txid)
                self.records[txid] = codec.rebuild_record(tx, mode, lookup)
            txids.append(txid)
        return txids

    def _root_lookup(self, mode: EncodingMode):
        def lookup(ref_id: str) -> LogRecord | None:
            items = self.list_items("ID", ref_id.encode("utf-8"))
            if not items:
                return None
            txid = items[0][0]
            if txid not in self.records:
                self.calls += 1
                tx = self.view.get_raw_transaction(txid)
                # original records carry all fields; no second hop
                self.records[txid] = codec.rebuild_record(tx, mode, None)
            return self.records[txid]

        return lookup

    def result(self, txids, peak: int = 0) -> ResultSet:
        ordered = sorted(set(txids), key=self.view.confirmation_ordinal)
        return ResultSet([self.records[t] for t in ordered], self.calls, peak)


def point_query_baseline(view, pred: Predicate) -> ResultSet:
    """Single index lookup; records parsed from the stored item values."""
    session = _Session(view)
    for txid, value in session.list_items(pred.attribute, pred.value):
        if txid not in session.records:
            session.records[txid] = codec.parse_log_line(value.decode("utf-8"))
    return session.result(session.records)


def point_query_enhanced(view, pred: Predicate, mode: EncodingMode) -> ResultSet:
    """Index lookup plus one transaction fetch per hit (T + 1 calls).

    With normalization on, User/Resource lookups also expand through the
    Ref-ID stream: matching original records are found first, then every
    record pointing back at them is pulled in, since follow-ups share the
    original's User and Resource but carry no items of their own for them.
    """
    session = _Session(view)
    txids = session.fetch(pred.attribute, pred.value, mode)
    if mode.normalize and pred.attribute in ("User", "Resource"):
        for root_txid in list(txids):
            root = session.records[root_txid]
            txids.extend(session.fetch("Ref-ID", root.id.encode("utf-8"), mode))
    return session.result(txids)


def _dedupe(preds) -> list[Predicate]:
    by_attr: dict[str, Predicate] = {}
    for pred in preds:
        seen = by_attr.get(pred.attribute)
        if seen is not None and seen.value != pred.value:
            raise ConflictingPredicates(pred.attribute)
        by_attr[pred.attribute] = pred
    if not by_attr:
        raise EmptyInput("AND query needs at least one predicate")
    return list(by_attr.values())


def and_query_baseline(view, preds) -> ResultSet:
    """Intersect the full result of one point query per predicate."""
    preds = _dedupe(preds)
    session = _Session(view)
    common: set[bytes] | None = None
    peak = 0
    values: dict[bytes, bytes] = {}
    for pred in preds:
        items = session.list_items(pred.attribute, pred.value)
        peak = max(peak, len(items))
        values.update(items)
        matched = {txid for txid, _ in items}
        common = matched if common is None else common & matched
    for txid in common:
        session.records[txid] = codec.parse_log_line(values[txid].decode("utf-8"))
    return session.result(common, peak)


def and_query_enhanced(view, preds, sel: SelectivityList, mode: EncodingMode) -> ResultSet:
    """One point query on the most selective predicate, then filter in memory."""
    preds = _dedupe(preds)
    chosen_attr = sel.most_selective([p.attribute for p in preds])
    chosen = next(p for p in preds if p.attribute == chosen_attr)
    base = point_query_enhanced(view, chosen, mode)
    records = base.records
    peak = len(records)
    for pred in preds:
        if pred is chosen:
            continue
        want = pred.value.decode("utf-8")
        records = [r for r in records if codec.field_value(r, pred.attribute) == want]
    return ResultSet(records, base.api_calls, peak)


def range_query_baseline(view, start: int, end: int, mode: EncodingMode) -> ResultSet:
    """One point query per timestamp in the inclusive interval."""
    if start > end or start < 0:
        raise InvalidRange(f"[{start}, {end}]")
    session = _Session(view)
    if mode.mode == BASELINE:
        records = session.records
        list_items = view.list_stream_key_items  # bound once: hot loop
        n = 0
        for t in range(start, end + 1):
            n += 1
            for txid, value in list_items("Timestamp", str(t).encode("utf-8")):
                if txid not in records:
                    records[txid] = codec.parse_log_line(value.decode("utf-8"))
        session.calls = n
        return session.result(records)
    txids: list[bytes] = []
    for t in range(start, end + 1):
        txids.extend(session.fetch("Timestamp", str(t).encode("utf-8"), mode))
    return session.result(txids)


def range_query_enhanced(
    view, start: int, end: int, params: TsIndexParams, mode: EncodingMode
) -> ResultSet:
    """One point query per decomposition bucket instead of per timestamp."""
    if mode.mode != ENHANCED or mode.ts_params != params:
        raise ParamsMismatch("chain was not encoded with these index params")
    session = _Session(view)
    txids: list[bytes] = []
    for part in decompose(start, end, params).parts:
        stream = params.level_stream(part.level)
        txids.extend(session.fetch(stream, str(part.start).encode("utf-8"), mode))
    return session.result(txids)


def sort_results(rs: ResultSet, attribute: str, order: str = "asc") -> ResultSet:
    """Stable sort; Timestamp compares numerically, other fields as bytes."""
    if attribute not in _FIELD_POS:
        raise ValueError(f"unknown attribute {attribute!r}")
    if order not in ("asc", "desc"):
        raise ValueError(f"order must be asc or desc, not {order!r}")
    if attribute == "Timestamp":
        key = lambda r: r.timestamp
    else:
        key = lambda r: codec.field_value(r, attribute).encode("utf-8")
    records = sorted(rs.records, key=key, reverse=order == "desc")
    return ResultSet(records, rs.api_calls, rs.peak_records)
