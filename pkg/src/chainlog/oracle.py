"""Naive in-memory reference store: linear scans over parsed records.

This is the ground truth the chain-backed query pipelines are checked
against, and the third mode of the benchmark harness.
"""

from __future__ import annotations

from .codec import LogRecord, field_value
from .errors import InvalidRange


class NaiveStore:
    def __init__(self, records=()):
        self.records: list[LogRecord] = list(records)

    def insert(self, record: LogRecord) -> None:
        self.records.append(record)

    def point_query(self, attribute: str, value: str) -> list[LogRecord]:
        return [r for r in self.records if field_value(r, attribute) == value]

    def and_query(self, pairs) -> list[LogRecord]:
        pairs = list(pairs)
        return [
            r for r in self.records
            if all(field_value(r, a) == v for a, v in pairs)
        ]

    def range_query(self, start: int, end: int) -> list[LogRecord]:
        if start > end:
            raise InvalidRange(f"[{start}, {end}]")
        return [r for r in self.records if start <= r.timestamp <= end]
