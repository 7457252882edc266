"""Benchmark harness: insertion, query, and storage experiments at desk scale.

Each scenario sweeps corpus sizes and runs its workload `rounds` times per
(mode, size, workload point) cell, timing wall-clock and recording the
api-call count and chain size. Wall-clock depends on the machine; api_calls
and chain bytes are deterministic for a fixed seed and are the numbers the
tests pin down. When several modes run the same query workload the harness
cross-checks that they return identical record sets.

CSV output: scenario,mode,records,workload,round,wall_ms,api_calls,chain_bytes
with one data row per round.
"""

from __future__ import annotations

import csv
import itertools
import random
import statistics
import time
from dataclasses import dataclass, field, replace

from . import codec, engine
from .codec import EncodingMode, LogRecord
from .errors import InvalidSpec
from .ledger import Chain
from .network import Cluster
from .oracle import NaiveStore
from .tsindex import DEFAULT_PARAMS, TsIndexParams

ORACLE = "oracle"
MODES = (codec.BASELINE, codec.ENHANCED, ORACLE)

CSV_HEADER = ("scenario", "mode", "records", "workload", "round",
              "wall_ms", "api_calls", "chain_bytes")


@dataclass(frozen=True)
class CorpusSpec:
    """Shape of a synthetic access-log corpus."""

    records: int
    node_values: int = 4
    users: int = 50
    activities: int = 8
    resources: int = 30
    follow_fraction: float = 0.3  # records whose Ref-ID points at an earlier one
    ts_start: int = 1_522_000_000_000
    ts_span: int = 1_000_000

    def __post_init__(self):
        if self.records < 1:
            raise InvalidSpec("need at least one record")
        for name in ("node_values", "users", "activities", "resources"):
            v = getattr(self, name)
            if not 1 <= v <= self.records:
                raise InvalidSpec(f"{name}={v} must be in 1..{self.records}")
        if not 0.0 <= self.follow_fraction <= 1.0:
            raise InvalidSpec("follow_fraction must be in [0, 1]")
        if self.ts_span < 1 or self.ts_start < 0:
            raise InvalidSpec("timestamp span must be positive")


def generate_corpus(spec: CorpusSpec, seed: int = 0) -> list[LogRecord]:
    """Deterministic synthetic corpus.

    Timestamps are uniform over the span and emitted in ascending order.
    Exactly floor(follow_fraction * records) records are follow-ups: their
    Ref-ID points at an earlier original record and they copy its User and
    Resource, which is what makes ref normalization lossless.
    """
    rng = random.Random(seed)
    n = spec.records
    nodes = [str(i + 1) for i in range(spec.node_values)]
    users = [f"u{i:03d}" for i in range(spec.users)]
    activities = [f"act{i:03d}" for i in range(spec.activities)]
    resources = [f"res{i:03d}" for i in range(spec.resources)]

    n_follow = min(int(spec.follow_fraction * n), n - 1)
    follow_at = set(rng.sample(range(1, n), n_follow)) if n_follow else set()
    stamps = sorted(rng.randrange(spec.ts_start, spec.ts_start + spec.ts_span)
                    for _ in range(n))

    out: list[LogRecord] = []
    roots: list[LogRecord] = []
    for i in range(n):
        rec_id = str(i + 1)
        if i in follow_at:
            root = roots[rng.randrange(len(roots))]
            rec = LogRecord(stamps[i], rng.choice(nodes), rec_id, root.id,
                            root.user, rng.choice(activities), root.resource)
        else:
            rec = LogRecord(stamps[i], rng.choice(nodes), rec_id, rec_id,
                            rng.choice(users), rng.choice(activities),
                            rng.choice(resources))
            roots.append(rec)
        out.append(rec)
    return out


# ----- store construction ---------------------------------------------------

def encode_corpus(records, mode: EncodingMode, publisher: int = 0):
    """Transactions for a record sequence, in order (roots before referrers)."""
    by_id: dict[str, LogRecord] = {}
    txs = []
    for rec in records:
        if mode.mode == codec.BASELINE:
            txs.append(codec.encode_baseline(rec, publisher))
        else:
            txs.append(codec.encode_enhanced(rec, mode.ts_params, mode.normalize,
                                             by_id.get, publisher))
        by_id.setdefault(rec.id, rec)
    return txs


def load_cluster(cluster: Cluster, records, mode: EncodingMode,
                 order: str = "interleaved") -> int:
    """Insert a corpus and drain the pool; returns transactions published.

    `order` controls which node each record is submitted at: "interleaved"
    rotates through the nodes record by record, "sequential" gives each node
    one contiguous slice of the corpus.
    """
    if order not in ("interleaved", "sequential"):
        raise InvalidSpec(f"unknown insert order {order!r}")
    cluster.ensure_streams(mode.stream_names)
    records = list(records)
    n_nodes = cluster.n_nodes
    if order == "interleaved":
        sites = (i % n_nodes for i in range(len(records)))
    else:
        per = -(-len(records) // n_nodes)  # ceil
        sites = (min(i // per, n_nodes - 1) for i in range(len(records)))
    for site, tx in zip(sites, encode_corpus(records, mode)):
        cluster.submit(site, tx)
    cluster.run_until_drained()
    return len(records)


def build_chain(records, mode: EncodingMode, batch_limit: int = 512) -> Chain:
    """Single free-standing chain holding the corpus (storage experiments)."""
    chain = Chain(batch_limit)
    for name in mode.stream_names:
        chain.create_stream(name)
    for tx in encode_corpus(records, mode):
        chain.publish(tx)
    while chain.pending_count:
        chain.confirm_block()
    return chain


def compare_storage(corpus, params: TsIndexParams = DEFAULT_PARAMS,
                    normalize: bool = False) -> tuple[int, int, float]:
    """(baseline bytes, enhanced bytes, reduction fraction) for one corpus."""
    baseline = build_chain(corpus, EncodingMode.baseline()).chain_size_bytes()
    enhanced = build_chain(
        corpus, EncodingMode.enhanced(params, normalize)).chain_size_bytes()
    return baseline, enhanced, 1.0 - enhanced / baseline


# ----- scenarios ------------------------------------------------------------

@dataclass
class BenchScenario:
    scenario_id: str
    workload: str  # insert | point | and | range
    record_counts: list[int]
    rounds: int = 10
    modes: tuple[str, ...] = MODES
    seed: int = 0
    corpus: CorpusSpec | None = None  # records field is overridden per count
    params: TsIndexParams = DEFAULT_PARAMS
    normalize: bool = False
    queries: int = 20
    attributes: tuple[str, ...] = codec.FIELD_NAMES
    and_key_counts: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    range_lengths: tuple[int, ...] = (100, 1_000, 10_000)
    insert_order: str = "interleaved"
    n_nodes: int = 1
    batch_limit: int = 512

    def __post_init__(self):
        if self.rounds < 1:
            raise InvalidSpec("rounds must be >= 1")
        if not self.record_counts or any(c < 1 for c in self.record_counts):
            raise InvalidSpec("record counts must be positive")
        if list(self.record_counts) != sorted(self.record_counts):
            raise InvalidSpec("record counts must be increasing")
        if self.workload not in ("insert", "point", "and", "range"):
            raise InvalidSpec(f"unknown workload {self.workload!r}")
        unknown = set(self.modes) - set(MODES)
        if unknown:
            raise InvalidSpec(f"unknown modes {sorted(unknown)}")

    def corpus_for(self, count: int) -> CorpusSpec:
        base = self.corpus if self.corpus is not None else CorpusSpec(records=count)
        caps = {
            name: min(getattr(base, name), count)
            for name in ("node_values", "users", "activities", "resources")
        }
        return replace(base, records=count, **caps)

    def encoding(self, mode: str) -> EncodingMode:
        if mode == codec.BASELINE:
            return EncodingMode.baseline()
        return EncodingMode.enhanced(self.params, self.normalize)


@dataclass
class BenchResult:
    scenario_id: str
    mode: str
    records: int
    workload: str  # one workload point, e.g. "attr=Activity" or "len=1000"
    wall_ms: list[float] = field(default_factory=list)
    api_calls: int = 0
    chain_bytes: int = 0

    @property
    def mean_ms(self) -> float:
        return statistics.fmean(self.wall_ms)

    @property
    def stdev_ms(self) -> float:
        return statistics.stdev(self.wall_ms) if len(self.wall_ms) > 1 else 0.0


class _Queries:
    """The concrete query batch for one (count, workload point) cell."""

    def __init__(self, kind: str, jobs: list):
        self.kind = kind
        self.jobs = jobs  # point: (attr, value); and: [(attr, value)...]; range: (s, e)

    def run_oracle(self, store: NaiveStore):
        if self.kind == "point":
            return [store.point_query(a, v) for a, v in self.jobs]
        if self.kind == "and":
            return [store.and_query(pairs) for pairs in self.jobs]
        return [store.range_query(s, e) for s, e in self.jobs]

    def run_chain(self, view, mode: EncodingMode, sel: engine.SelectivityList):
        enhanced = mode.mode == codec.ENHANCED
        out = []
        for job in self.jobs:
            if self.kind == "point":
                pred = engine.Predicate.of(*job)
                rs = (engine.point_query_enhanced(view, pred, mode) if enhanced
                      else engine.point_query_baseline(view, pred))
            elif self.kind == "and":
                preds = [engine.Predicate.of(a, v) for a, v in job]
                rs = (engine.and_query_enhanced(view, preds, sel, mode) if enhanced
                      else engine.and_query_baseline(view, preds))
            else:
                s, e = job
                rs = (engine.range_query_enhanced(view, s, e, mode.ts_params, mode)
                      if enhanced else engine.range_query_baseline(view, s, e, mode))
            out.append(rs)
        return out


def _query_points(scenario: BenchScenario, corpus, spec: CorpusSpec,
                  rng: random.Random) -> list[tuple[str, _Queries]]:
    """Expand the workload into labelled query batches."""
    if scenario.workload == "point":
        points = []
        for attr in scenario.attributes:
            jobs = [(attr, codec.field_value(rng.choice(corpus), attr))
                    for _ in range(scenario.queries)]
            points.append((f"attr={attr}", _Queries("point", jobs)))
        return points
    if scenario.workload == "and":
        points = []
        for k in scenario.and_key_counts:
            jobs = []
            for combo in itertools.combinations(codec.FIELD_NAMES, k):
                rec = rng.choice(corpus)
                jobs.append([(a, codec.field_value(rec, a)) for a in combo])
            points.append((f"keys={k}", _Queries("and", jobs)))
        return points
    points = []
    for length in scenario.range_lengths:
        jobs = []
        for _ in range(scenario.queries):
            lo = spec.ts_start + rng.randrange(max(1, spec.ts_span - length))
            jobs.append((lo, lo + length - 1))
        points.append((f"len={length}", _Queries("range", jobs)))
    return points


def _check_equivalence(per_mode: dict[str, list]) -> None:
    """All modes must return the same record set for every query."""
    reference_mode, reference = next(iter(per_mode.items()))
    ref_sets = [frozenset(codec.record_line(r) for r in batch) for batch in reference]
    for mode, batches in per_mode.items():
        got = [frozenset(codec.record_line(r) for r in batch) for batch in batches]
        if got != ref_sets:
            raise RuntimeError(
                f"result mismatch between {reference_mode} and {mode} pipelines")


def run_scenario(scenario: BenchScenario) -> list[BenchResult]:
    results: list[BenchResult] = []
    for count in scenario.record_counts:
        spec = scenario.corpus_for(count)
        corpus = generate_corpus(spec, scenario.seed)
        if scenario.workload == "insert":
            results.extend(_run_insert(scenario, count, corpus))
            continue

        stores = {}
        for mode in scenario.modes:
            if mode == ORACLE:
                stores[mode] = NaiveStore(corpus)
            else:
                cluster = Cluster(scenario.n_nodes, scenario.batch_limit)
                load_cluster(cluster, corpus, scenario.encoding(mode),
                             scenario.insert_order)
                stores[mode] = cluster
        sel = engine.build_selectivity_list(corpus)

        rng = random.Random(scenario.seed + count)
        for label, queries in _query_points(scenario, corpus, spec, rng):
            answers: dict[str, list] = {}
            for mode in scenario.modes:
                res = BenchResult(scenario.scenario_id, mode, count, label)
                for _ in range(scenario.rounds):
                    t0 = time.perf_counter()
                    if mode == ORACLE:
                        batches = queries.run_oracle(stores[mode])
                        api = 0
                        size = 0
                    else:
                        view = stores[mode].query_node(0)
                        sets = queries.run_chain(view, scenario.encoding(mode), sel)
                        batches = [rs.records for rs in sets]
                        api = sum(rs.api_calls for rs in sets)
                        size = view.chain_size_bytes()
                    res.wall_ms.append((time.perf_counter() - t0) * 1e3)
                    res.api_calls, res.chain_bytes = api, size
                answers[mode] = batches
                results.append(res)
            _check_equivalence(answers)
    return results


def _run_insert(scenario: BenchScenario, count: int, corpus) -> list[BenchResult]:
    label = f"insert:{scenario.insert_order}"
    out = []
    for mode in scenario.modes:
        res = BenchResult(scenario.scenario_id, mode, count, label)
        for _ in range(scenario.rounds):
            t0 = time.perf_counter()
            if mode == ORACLE:
                store = NaiveStore()
                for rec in corpus:
                    store.insert(rec)
                api, size = 0, 0
            else:
                cluster = Cluster(scenario.n_nodes, scenario.batch_limit)
                api = load_cluster(cluster, corpus, scenario.encoding(mode),
                                   scenario.insert_order)
                size = cluster.query_node(0).chain_size_bytes()
            res.wall_ms.append((time.perf_counter() - t0) * 1e3)
            res.api_calls, res.chain_bytes = api, size
        out.append(res)
    return out


def write_csv(results, stream) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_HEADER)
    for res in results:
        for i, ms in enumerate(res.wall_ms):
            writer.writerow([res.scenario_id, res.mode, res.records, res.workload,
                             i, f"{ms:.3f}", res.api_calls, res.chain_bytes])
