"""Immutable audit-log chain with indexed point, AND, and range queries.

Access-log records are stored one per transaction on a hash-chained,
multi-node replicated key-value stream store. A hierarchical timestamp
bucket index plus a selectivity-ranked AND planner keep queries cheap on
a store that can only ever be appended to.
"""

from .codec import BASELINE, ENHANCED, EncodingMode, LogRecord, parse_log_line, record_line
from .engine import (
    Predicate,
    ResultSet,
    SelectivityList,
    and_query_baseline,
    and_query_enhanced,
    build_selectivity_list,
    point_query_baseline,
    point_query_enhanced,
    range_query_baseline,
    range_query_enhanced,
    sort_results,
)
from .ledger import Block, Chain, ChainView, StreamItem, Transaction, make_transaction
from .network import Cluster
from .oracle import NaiveStore
from .tsindex import (
    DEFAULT_PARAMS,
    Decomposition,
    RangePart,
    TsIndexParams,
    bucket_keys,
    decompose,
    query_count,
    tune_params,
)

__version__ = "0.1.0"

__all__ = [
    "BASELINE",
    "ENHANCED",
    "Block",
    "Chain",
    "ChainView",
    "Cluster",
    "DEFAULT_PARAMS",
    "Decomposition",
    "EncodingMode",
    "LogRecord",
    "NaiveStore",
    "Predicate",
    "RangePart",
    "ResultSet",
    "SelectivityList",
    "StreamItem",
    "Transaction",
    "TsIndexParams",
    "and_query_baseline",
    "and_query_enhanced",
    "bucket_keys",
    "build_selectivity_list",
    "decompose",
    "make_transaction",
    "parse_log_line",
    "point_query_baseline",
    "point_query_enhanced",
    "query_count",
    "range_query_baseline",
    "range_query_enhanced",
    "record_line",
    "sort_results",
    "tune_params",
]
