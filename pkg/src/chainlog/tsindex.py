"""Hierarchical timestamp buckets and range decomposition.

Levels 0..L-1 carry bucket widths m^(L-1), m^(L-2), ..., 1. A timestamp t
belongs to the level-i bucket starting at t - t % width_i, so buckets are
aligned to absolute zero. A range query decomposes an inclusive interval
into the fewest aligned buckets: fine parts where the interval is
misaligned at the edges, the coarsest fitting buckets in between.

Intervals are inclusive on both ends throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EmptyInput, InvalidRange


@dataclass(frozen=True)
class TsIndexParams:
    """Level count and per-level width multiplier of the bucket hierarchy."""

    levels: int
    multiplier: int

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.multiplier < 2:
            raise ValueError("multiplier must be >= 2")

    @property
    def elemental_ranges(self) -> tuple[int, ...]:
        """Bucket widths per level, coarsest first; the finest is always 1."""
        return tuple(self.multiplier ** (self.levels - 1 - i) for i in range(self.levels))

    def level_stream(self, level: int) -> str:
        """Stream holding level `level` buckets; the finest reuses Timestamp."""
        if level == self.levels - 1:
            return "Timestamp"
        return f"L{level}"

    @property
    def extra_streams(self) -> tuple[str, ...]:
        """Index streams beyond the 7 base fields ("L0".."L{L-2}")."""
        return tuple(f"L{i}" for i in range(self.levels - 1))


DEFAULT_PARAMS = TsIndexParams(levels=3, multiplier=100)


@dataclass(frozen=True)
class RangePart:
    level: int
    start: int  # always a multiple of width
    width: int


@dataclass
class Decomposition:
    parts: list[RangePart]
    start: int
    end: int


def _check_range(start: int, end: int) -> None:
    if start < 0:
        raise InvalidRange(f"negative start {start}")
    if start > end:
        raise InvalidRange(f"start {start} > end {end}")


def bucket_keys(t: int, params: TsIndexParams) -> list[tuple[int, int]]:
    """(level, bucket start) for every level a timestamp is recorded at."""
    if t < 0:
        raise InvalidRange(f"negative timestamp {t}")
    return [(i, t - t % w) for i, w in enumerate(params.elemental_ranges)]


def decompose(start: int, end: int, params: TsIndexParams) -> Decomposition:
    """Cover [start, end] exactly with the fewest aligned buckets.

    Greedy, left to right: at each position take the coarsest bucket that
    starts there and fits inside the remaining interval. Width 1 always
    fits, so the loop terminates; parts come out disjoint, sorted, and
    contiguous.
    """
    _check_range(start, end)
    widths = params.elemental_ranges
    parts: list[RangePart] = []
    cur = start
    while cur <= end:
        for level, width in enumerate(widths):
            if cur % width == 0 and cur + width - 1 <= end:
                parts.append(RangePart(level, cur, width))
                cur += width
                break
    return Decomposition(parts, start, end)


def query_count(start: int, end: int, params: TsIndexParams) -> int:
    """Number of bucket lookups a decomposed range query needs."""
    return len(decompose(start, end, params).parts)


def tune_params(
    sample: Sequence,
    workload: Iterable[tuple[int, int]],
    level_candidates: Iterable[int],
    multiplier_candidates: Iterable[int],
) -> TsIndexParams:
    """Pick (levels, multiplier) by exhaustive search over the candidate grid.

    Cost of a candidate = total bucket lookups over the workload plus one
    key-value pair of insertion overhead per extra level per sample record.
    Ties go to fewer levels, then to the smaller multiplier.
    """
    workload = list(workload)
    levels = sorted(set(level_candidates))
    multipliers = sorted(set(multiplier_candidates))
    if not sample or not workload or not levels or not multipliers:
        raise EmptyInput("tune_params needs a sample, a workload, and candidates")
    for start, end in workload:
        _check_range(start, end)

    best: TsIndexParams | None = None
    best_cost = None
    for lv in levels:
        for mult in multipliers:
            params = TsIndexParams(lv, mult)
            cost = (lv - 1) * len(sample)
            cost += sum(query_count(s, e, params) for s, e in workload)
            if best_cost is None or cost < best_cost:
                best, best_cost = params, cost
    assert best is not None
    return best
