"""Non-interactive command-line interface.

Subcommands: insert a log file at a node, query with field predicates
and/or a timestamp range, run a benchmark scenario, and verify the chains.
All behaviour is driven by flags and an optional key=value config file;
nothing reads stdin. Exit codes: 0 ok, 2 parse error (log line or scenario
file), 3 ledger error, 4 invalid flag combination, 5 verification failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import bench, codec, engine
from .codec import EncodingMode
from .errors import ChainlogError, ConfigError, CorruptChainFile, ParseError
from .network import Cluster
from .tsindex import TsIndexParams

EXIT_PARSE = 2
EXIT_LEDGER = 3
EXIT_USAGE = 4
EXIT_VERIFY = 5

_FLAG_FIELDS = (
    ("--timestamp", "Timestamp"),
    ("--node-field", "Node"),
    ("--id", "ID"),
    ("--ref-id", "Ref-ID"),
    ("--user", "User"),
    ("--activity", "Activity"),
    ("--resource", "Resource"),
)
_SORT_NAMES = {name.lower(): name for name in codec.FIELD_NAMES}


@dataclass
class Config:
    nodes: int = 4
    batch_limit: int = 512
    confirm_delay: int = 1
    mode: str = codec.ENHANCED
    normalize: bool = False
    levels: int = 3
    multiplier: int = 100
    data_dir: str | None = None
    sample: str | None = None

    @property
    def ts_params(self) -> TsIndexParams:
        return TsIndexParams(self.levels, self.multiplier)

    @property
    def encoding(self) -> EncodingMode:
        if self.mode == codec.BASELINE:
            return EncodingMode.baseline()
        return EncodingMode.enhanced(self.ts_params, self.normalize)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def load_config(path: str | None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    types = {f.name: f.type for f in fields(Config)}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in types:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in ("data_dir", "sample", "mode"):
            setattr(cfg, key, value)
        elif key == "normalize":
            cfg.normalize = _parse_bool(value)
        else:
            try:
                setattr(cfg, key, int(value))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: {key} needs an integer") from None
    if cfg.mode not in (codec.BASELINE, codec.ENHANCED):
        raise ConfigError(f"mode must be baseline or enhanced, not {cfg.mode!r}")
    return cfg


def open_cluster(cfg: Config) -> Cluster:
    cluster = Cluster(cfg.nodes, cfg.batch_limit, cfg.confirm_delay, cfg.data_dir)
    cluster.ensure_streams(cfg.encoding.stream_names)
    return cluster


# ----- subcommands ----------------------------------------------------------

def cmd_insert(args) -> int:
    cfg = load_config(args.config)
    cluster = open_cluster(cfg)
    node = args.node
    mode = cfg.encoding
    view = cluster.query_node(node)

    by_id: dict[str, codec.LogRecord] = {}

    def root_lookup(ref_id):
        # roots may come from this file (possibly still pending) or the chain
        rec = by_id.get(ref_id)
        if rec is not None:
            return rec
        items = view.list_stream_key_items("ID", ref_id.encode("utf-8"))
        if not items:
            return None
        tx = view.get_raw_transaction(items[0][0])
        return codec.rebuild_record(tx, mode, None)

    inserted = 0
    for lineno, raw in enumerate(Path(args.file).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = codec.parse_log_line(raw)
        except ParseError as exc:
            print(f"{args.file}: line {lineno}: {exc}", file=sys.stderr)
            return EXIT_PARSE
        if mode.mode == codec.BASELINE:
            tx = codec.encode_baseline(rec, publisher=node)
        else:
            tx = codec.encode_enhanced(rec, mode.ts_params, mode.normalize,
                                       root_lookup, publisher=node)
        cluster.submit(node, tx)
        by_id.setdefault(rec.id, rec)
        inserted += 1
    blocks = cluster.run_until_drained()
    size = cluster.query_node(node).chain_size_bytes()
    print(f"inserted={inserted} blocks={blocks} bytes={size}")
    return 0


def _collect_predicates(args) -> list[engine.Predicate]:
    preds = []
    for flag, attribute in _FLAG_FIELDS:
        value = getattr(args, flag.lstrip("-").replace("-", "_"))
        if value is not None:
            preds.append(engine.Predicate.of(attribute, value))
    return preds


def cmd_query(args) -> int:
    cfg = load_config(args.config)
    if args.mode is not None and args.mode != cfg.mode:
        print(f"--mode {args.mode} does not match the configured "
              f"{cfg.mode} encoding", file=sys.stderr)
        return EXIT_USAGE
    preds = _collect_predicates(args)
    has_range = args.ts_from is not None or args.ts_to is not None
    if has_range and (args.ts_from is None or args.ts_to is None):
        print("--from and --to must be given together", file=sys.stderr)
        return EXIT_USAGE
    if has_range and args.ts_from > args.ts_to:
        print("--from must not exceed --to", file=sys.stderr)
        return EXIT_USAGE
    if not preds and not has_range:
        print("need at least one field predicate or --from/--to", file=sys.stderr)
        return EXIT_USAGE
    sort_attr = None
    if args.sort is not None:
        sort_attr = _SORT_NAMES.get(args.sort.lower())
        if sort_attr is None:
            print(f"unknown sort field {args.sort!r}", file=sys.stderr)
            return EXIT_USAGE

    cluster = open_cluster(cfg)
    view = cluster.query_node(args.node)
    mode = cfg.encoding
    enhanced = mode.mode == codec.ENHANCED

    if has_range:
        if enhanced:
            rs = engine.range_query_enhanced(view, args.ts_from, args.ts_to,
                                             mode.ts_params, mode)
        else:
            rs = engine.range_query_baseline(view, args.ts_from, args.ts_to, mode)
        if preds:  # conjunction with the range, filtered in memory
            want = {p.attribute: p.value.decode("utf-8") for p in preds}
            records = [r for r in rs.records
                       if all(codec.field_value(r, a) == v for a, v in want.items())]
            rs = engine.ResultSet(records, rs.api_calls)
    elif len(preds) == 1:
        rs = (engine.point_query_enhanced(view, preds[0], mode) if enhanced
              else engine.point_query_baseline(view, preds[0]))
    else:
        if enhanced:
            sel = _selectivity(cfg)
            rs = engine.and_query_enhanced(view, preds, sel, mode)
        else:
            rs = engine.and_query_baseline(view, preds)

    if sort_attr is not None:
        rs = engine.sort_results(rs, sort_attr, args.order)
    for line in rs.lines():
        print(line)
    return 0


def _selectivity(cfg: Config) -> engine.SelectivityList:
    if cfg.sample is None:
        return engine.SelectivityList.default()
    records = [codec.parse_log_line(line)
               for line in Path(cfg.sample).read_text().splitlines() if line.strip()]
    if not records:
        return engine.SelectivityList.default()
    return engine.build_selectivity_list(records)


def cmd_bench(args) -> int:
    load_config(args.config)  # validated even though scenarios are self-contained
    try:
        scenario = parse_scenario(Path(args.scenario).read_text(), args.scenario)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    results = bench.run_scenario(scenario)
    bench.write_csv(results, sys.stdout)
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    try:
        cluster = open_cluster(cfg)
    except CorruptChainFile as exc:
        print(f"chain file unreadable: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    all_ok = True
    for node in range(cluster.n_nodes):
        view = cluster.query_node(node)
        ok = view.verify_chain()
        all_ok &= ok
        print(f"node={node} height={view.height} txs={view.tx_count} "
              f"ok={str(ok).lower()}")
    return 0 if all_ok else EXIT_VERIFY


# ----- scenario files ---------------------------------------------------------

_SCENARIO_INTS = {"rounds": "rounds", "seed": "seed", "queries": "queries",
                  "nodes": "n_nodes", "batch_limit": "batch_limit"}


def parse_scenario(text: str, origin: str = "<scenario>") -> bench.BenchScenario:
    """key=value scenario description -> BenchScenario."""
    values: dict[str, object] = {"scenario_id": Path(origin).stem}
    corpus: dict[str, object] = {}
    params = {"levels": 3, "multiplier": 100}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        try:
            if key == "id":
                values["scenario_id"] = value
            elif key == "workload":
                values["workload"] = value
            elif key == "counts":
                values["record_counts"] = [int(v) for v in value.split(",")]
            elif key == "modes":
                values["modes"] = tuple(v.strip() for v in value.split(","))
            elif key in _SCENARIO_INTS:
                values[_SCENARIO_INTS[key]] = int(value)
            elif key == "normalize":
                values["normalize"] = _parse_bool(value)
            elif key in ("levels", "multiplier"):
                params[key] = int(value)
            elif key == "attributes":
                values["attributes"] = tuple(v.strip() for v in value.split(","))
            elif key == "and_keys":
                values["and_key_counts"] = tuple(int(v) for v in value.split(","))
            elif key == "range_lens":
                values["range_lengths"] = tuple(int(v) for v in value.split(","))
            elif key == "order":
                values["insert_order"] = value
            elif key == "follow_fraction":
                corpus["follow_fraction"] = float(value)
            elif key == "span":
                corpus["ts_span"] = int(value)
            elif key in ("users", "activities", "resources", "node_values"):
                corpus[key] = int(value)
            else:
                raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: {exc}") from None
    if "workload" not in values or "record_counts" not in values:
        raise ConfigError(f"{origin}: scenario needs workload= and counts=")
    try:
        if corpus:
            max_count = max(values["record_counts"])
            values["corpus"] = bench.CorpusSpec(records=max_count, **corpus)
        values["params"] = TsIndexParams(**params)
        return bench.BenchScenario(**values)
    except (ChainlogError, TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: {exc}") from None


# ----- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainlog",
        description="Append-only audit-log chain: insert, query, bench, verify.")
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("insert", help="insert a 7-field log file at a node")
    p.add_argument("--node", type=int, default=0, help="submission node id")
    p.add_argument("--file", required=True, help="log file, one record per line")
    p.set_defaults(func=cmd_insert)

    p = sub.add_parser("query", help="point/AND/range query against one node")
    p.add_argument("--node", type=int, default=0, help="node to query")
    for flag, attribute in _FLAG_FIELDS:
        p.add_argument(flag, metavar="VALUE", help=f"{attribute} equals VALUE")
    p.add_argument("--from", dest="ts_from", type=int, help="range start (inclusive)")
    p.add_argument("--to", dest="ts_to", type=int, help="range end (inclusive)")
    p.add_argument("--sort", help="sort field (e.g. timestamp)")
    p.add_argument("--order", choices=("asc", "desc"), default="asc")
    p.add_argument("--mode", choices=(codec.BASELINE, codec.ENHANCED),
                   help="must match the configured encoding")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run a scenario file, CSV to stdout")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="verify every node's chain")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    except ChainlogError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_LEDGER


if __name__ == "__main__":
    sys.exit(main())
