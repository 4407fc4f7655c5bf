"""Command-line entry point: ``eutxo-cluster <subcommand> ...``.

Exit status: 0 success, 1 bad input or usage, 2 internal failure. Each run
prints exactly one summary line to stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import analytics
from .clustering import HeuristicSet, cluster_stream, read_assignments, write_assignments
from .ingestion import IngestError, stream_transactions
from .simulator import (InvalidParams, MissingAddress, SimParams, evaluate_labels,
                        read_truth, write_chain)

log = logging.getLogger("eutxo_cluster")

THREADS_ENV = "EUTXO_CLUSTER_THREADS"


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        usage = " ".join(self.format_usage().split())
        raise UsageError(f"{self.prog}: {message} ({usage})")


@dataclass
class RunConfig:
    subcommand: str
    heuristics: HeuristicSet = field(default_factory=HeuristicSet)
    large: int = analytics.LARGE_THRESHOLD
    super_: int = analytics.SUPER_THRESHOLD
    strict: bool = False
    origin_offset: int = 0
    threads: int = 0

    def __post_init__(self) -> None:
        if self.large < 1 or self.super_ < self.large:
            raise UsageError(f"thresholds need 1 <= --large <= --super "
                             f"(got {self.large}, {self.super_})")


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise UsageError(f"{THREADS_ENV} must be >= 0")
    # the pipeline is single-threaded, which satisfies any cap
    return n


def _heuristics(text: str) -> HeuristicSet:
    try:
        return HeuristicSet.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _out_dir_ok(path: Optional[str]) -> None:
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise InputError(f"output directory not writable: {parent}")


def _write_json(path: Optional[str], obj: dict) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _fmt_avg(v: Optional[float]) -> str:
    return "n/a" if v is None else f"{v:.2f}"


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--large", type=int, default=analytics.LARGE_THRESHOLD,
                   help="large-cluster threshold: size > LARGE (default %(default)s)")
    p.add_argument("--super", dest="super_", type=int, default=analytics.SUPER_THRESHOLD,
                   help="supercluster threshold: size > SUPER (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eutxo-cluster", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="ingest transactions and cluster addresses")
    p.add_argument("--input", required=True, help="transaction JSONL file")
    p.add_argument("--heuristics", type=_heuristics, default=HeuristicSet(),
                   help="comma list of h1,h2 (default both)")
    p.add_argument("--strict", action="store_true", help="abort on the first bad line")
    p.add_argument("--origin-offset", type=int, default=0, metavar="SECONDS")
    p.add_argument("--out-clusters", required=True, help="address,cluster_id CSV")
    p.add_argument("--out-summary", help="summary JSON (default stdout)")
    p.add_argument("--out-snapshot", help="ordinal,root_ordinal forest snapshot CSV")
    _add_thresholds(p)

    p = sub.add_parser("stats", help="summary and size histogram from an assignments CSV")
    p.add_argument("--assignments", required=True)
    p.add_argument("--out-summary", help="summary JSON (default stdout)")
    p.add_argument("--out-histogram", help="size,count CSV")
    _add_thresholds(p)

    p = sub.add_parser("fit", help="discrete power-law fit of cluster sizes")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--histogram", help="size,count CSV")
    src.add_argument("--assignments", help="address,cluster_id CSV")
    p.add_argument("--out", help="fit JSON (default stdout)")
    p.add_argument("--xmin", type=int, help="fix xmin instead of searching")
    p.add_argument("--min-tail", type=int, default=10)
    p.add_argument("--xmin-quantile", type=float, default=0.95)
    p.add_argument("--estimator", choices=("exact", "approx"), default="exact")

    p = sub.add_parser("series", help="daily new/active address and entity counts")
    p.add_argument("--input", required=True, help="transaction JSONL file")
    p.add_argument("--assignments", required=True)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--origin-offset", type=int, default=0, metavar="SECONDS")
    p.add_argument("--out", help="series CSV (default stdout)")

    p = sub.add_parser("simulate", help="generate a synthetic chain with ground truth")
    p.add_argument("--config", help="SimParams JSON; flags below override it")
    for f in SimParams.__dataclass_fields__.values():
        p.add_argument("--" + f.name.replace("_", "-"), dest="sim_" + f.name,
                       type=type(f.default), default=None)
    p.add_argument("--out-txs", required=True)
    p.add_argument("--out-truth", required=True)

    p = sub.add_parser("evaluate", help="pairwise precision/recall against ground truth")
    p.add_argument("--assignments", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="report JSON (default stdout)")
    return parser


def _cmd_cluster(args, cfg: RunConfig) -> str:
    for path in (args.out_clusters, args.out_summary, args.out_snapshot):
        _out_dir_ok(path)
    stream = stream_transactions(args.input, strict=cfg.strict)
    forest, run = cluster_stream(stream, cfg.heuristics)
    write_assignments(args.out_clusters, forest, stream.table)
    if args.out_snapshot:
        forest.save_snapshot(args.out_snapshot)
    summary = analytics.summarize(forest, cfg.large, cfg.super_)
    ingest = stream.stats
    obj = summary.to_json()
    obj["heuristics"] = cfg.heuristics.label
    obj["ingest"] = vars(ingest)
    obj["unions"] = {"h1": run.h1_unions, "h2": run.h2_unions}
    _write_json(args.out_summary, obj)
    return (f"cluster: {ingest.tx_count} txs ({ingest.skipped} skipped), "
            f"{ingest.distinct_payment_addresses} addresses -> {summary.total_clusters} clusters "
            f"[{cfg.heuristics.label}], singles {summary.single_member}, "
            f"medium avg {_fmt_avg(summary.medium_avg_size)}, large {summary.large_clusters}, "
            f"super {summary.superclusters}")


def _sizes_from_assignments(path: str) -> Counter:
    try:
        return Counter(read_assignments(path).values())
    except (OSError, ValueError) as e:
        raise InputError(str(e)) from None


def _cmd_stats(args, cfg: RunConfig) -> str:
    _out_dir_ok(args.out_histogram)
    hist = analytics.histogram_from_sizes(_sizes_from_assignments(args.assignments).values())
    summary = analytics.summary_from_histogram(hist, cfg.large, cfg.super_)
    _write_json(args.out_summary, summary.to_json())
    if args.out_histogram:
        analytics.write_histogram(args.out_histogram, hist)
    return (f"stats: {summary.total_clusters} clusters over {summary.total_addresses} addresses, "
            f"medium avg {_fmt_avg(summary.medium_avg_size)}, large {summary.large_clusters}, "
            f"super {summary.superclusters}")


def _cmd_fit(args, cfg: RunConfig) -> str:
    if args.histogram:
        try:
            hist = analytics.read_histogram(args.histogram)
        except (OSError, ValueError) as e:
            raise InputError(str(e)) from None
    else:
        hist = analytics.histogram_from_sizes(
            _sizes_from_assignments(args.assignments).values())
    try:
        fit = analytics.fit_power_law_histogram(
            hist, xmin=args.xmin, min_tail=args.min_tail,
            xmin_quantile=args.xmin_quantile, estimator=args.estimator)
    except analytics.DegenerateInput as e:
        raise InputError(f"cannot fit: {e}") from None
    _write_json(args.out, fit.to_json())
    return (f"fit: alpha {fit.alpha:.4f} +/- {fit.sigma:.4f}, xmin {fit.xmin}, "
            f"KS {fit.ks_distance:.4f}, n_tail {fit.n_tail}")


def _cmd_series(args, cfg: RunConfig) -> str:
    try:
        clusters = read_assignments(args.assignments)
    except (OSError, ValueError) as e:
        raise InputError(str(e)) from None
    stream = stream_transactions(args.input, strict=cfg.strict)
    table = stream.table

    def cluster_of(ordinal: int) -> int:
        addr = table.address(ordinal)
        try:
            return clusters[addr]
        except KeyError:
            raise InputError(f"address {addr!r} missing from {args.assignments}") from None

    rows = analytics.daily_series(stream, cluster_of, cfg.origin_offset)
    analytics.write_series(args.out or sys.stdout, rows)
    return f"series: {len(rows)} days from {stream.stats.tx_count} txs"


def _cmd_simulate(args, cfg: RunConfig) -> str:
    _out_dir_ok(args.out_txs)
    _out_dir_ok(args.out_truth)
    obj = {}
    if args.config:
        try:
            obj = SimParams.from_json(args.config).to_dict()
        except OSError as e:
            raise InputError(str(e)) from None
    for name in SimParams.__dataclass_fields__:
        v = getattr(args, "sim_" + name)
        if v is not None:
            obj[name] = v
    params = SimParams.from_dict(obj)
    n_tx, n_addr = write_chain(params, args.out_txs, args.out_truth)
    return (f"simulate: {n_tx} txs, {n_addr} addresses, {params.n_entities} entities, "
            f"seed {params.rng_seed}")


def _cmd_evaluate(args, cfg: RunConfig) -> str:
    try:
        clusters = read_assignments(args.assignments)
        truth = read_truth(args.truth)
    except (OSError, ValueError) as e:
        raise InputError(str(e)) from None
    report = evaluate_labels(clusters, truth)
    _write_json(args.out, report.to_json())
    return (f"evaluate: precision {report.pairwise_precision:.6f}, "
            f"recall {report.pairwise_recall:.6f}, f1 {report.f1:.6f}, "
            f"merged clusters {report.merged_entity_clusters}, "
            f"max entity span {report.largest_cluster_entity_span}")


_COMMANDS = {
    "cluster": _cmd_cluster,
    "stats": _cmd_stats,
    "fit": _cmd_fit,
    "series": _cmd_series,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.INFO)
        cfg = RunConfig(
            subcommand=args.command,
            heuristics=getattr(args, "heuristics", HeuristicSet()),
            large=getattr(args, "large", analytics.LARGE_THRESHOLD),
            super_=getattr(args, "super_", analytics.SUPER_THRESHOLD),
            strict=getattr(args, "strict", False),
            origin_offset=getattr(args, "origin_offset", 0),
            threads=_threads(),
        )
        line = _COMMANDS[args.command](args, cfg)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (InputError, IngestError, InvalidParams, MissingAddress, OSError) as e:
        msg = e.args[0] if isinstance(e, MissingAddress) else e
        print(f"error: {msg}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    print(f"{line} ({time.perf_counter() - t0:.1f}s)", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
