"""Command-line front end: generate, sanitize, evaluate, report.

Subcommands write plain text or CSV so runs compose in shell pipelines.
Every command that consumes randomness takes --seed (falling back to the
DPTRAJ_SEED environment variable, then to a fresh random seed) and is
bit-reproducible given the same seed and flags.

Exit codes: 0 success, 1 I/O or data-format failure, 2 invalid parameters,
3 location outside the supplied universe.
"""

from __future__ import annotations

import argparse
import csv
import os
import secrets
import sys
import time

from .datagen import GenConfig, generate
from .inference import order_violations
from .model import (
    DataFormatError,
    UnknownLocationError,
    load_db,
    write_db,
    write_universe,
)
from .pipeline import VARIANTS, sanitize
from .privacy import PrivacyParams, RandomSource, budget_ledger
from .release import release_stats
from .tree import dump_tree
from .utility import (
    DEFAULT_SANITY_FRACTION,
    UtilityReport,
    evaluate_workload,
    fsp_metrics,
    generate_workload,
    mine_top_k,
)

EXIT_IO = 1
EXIT_PARAMS = 2
EXIT_UNIVERSE = 3


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("DPTRAJ_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"DPTRAJ_SEED must be an integer, got {env!r}") from None
    return secrets.randbits(63)


def _open_output(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def cmd_sanitize(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    params = PrivacyParams(
        epsilon=args.epsilon, height=args.height, theta_multiplier=args.theta_mult
    )
    db, universe = load_db(args.input, args.universe)
    started = time.perf_counter()
    release, tree = sanitize(
        db,
        universe,
        params,
        RandomSource(seed),
        variant=args.variant,
        expand_empty=args.expand_empty,
        threads=args.threads,
    )
    elapsed = time.perf_counter() - started
    write_db(release, universe, args.output)
    if args.dump_tree:
        with open(args.dump_tree, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dump_tree(tree))

    total_nodes = -1  # skip the virtual root
    empty_born = 0
    for node in tree.nodes():
        total_nodes += 1
        empty_born += node.empty_born
    print(f"input={args.input} records={len(db)} universe={len(universe)}")
    print(
        f"epsilon={params.epsilon:g} height={params.height} theta={params.threshold:.6g} "
        f"theta_mult={params.theta_multiplier:g} variant={args.variant} seed={seed} "
        f"expand_empty={str(args.expand_empty).lower()} threads={args.threads}"
    )
    for line in budget_ledger(params).describe():
        print(line)
    print(f"tree.nodes={total_nodes} tree.empty_born={empty_born}")
    if args.variant == "full":
        print(f"inference.order_violations={order_violations(tree)}")
    print(f"release.records={len(release)} output={args.output}")
    print(f"runtime_seconds={elapsed:.3f}")
    return 0


def cmd_eval_count(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    raw, universe = load_db(args.raw, args.universe)
    sanitized, _ = load_db(args.sanitized, args.universe)
    workload = generate_workload(universe, args.height, args.queries_per_subset, seed)
    sanity = args.sanity_fraction * len(raw)
    started = time.perf_counter()
    averages = evaluate_workload(
        raw, sanitized, workload, len(universe), sanity, threads=args.threads
    )
    report = UtilityReport(subset_errors=averages, runtime_seconds=time.perf_counter() - started)
    out, close = _open_output(args.output)
    try:
        writer = csv.writer(out)
        writer.writerow(
            ["subset", "max_query_len", "queries", "epsilon", "height", "variant",
             "sanity", "avg_relative_error"]
        )
        for i, (max_len, avg) in enumerate(zip(workload.max_lengths, report.subset_errors), start=1):
            writer.writerow(
                [i, max_len, args.queries_per_subset, args.epsilon_label, args.height,
                 args.variant_label, f"{sanity:.6f}", f"{avg:.6f}"]
            )
    finally:
        if close:
            out.close()
    print(f"runtime_seconds={report.runtime_seconds:.3f}", file=sys.stderr)
    return 0


def cmd_eval_fsp(args: argparse.Namespace) -> int:
    raw, universe = load_db(args.raw, args.universe)
    sanitized, _ = load_db(args.sanitized, args.universe)
    k_values = sorted({int(v) for v in args.topk.split(",") if v.strip()})
    if not k_values or k_values[0] < 1:
        raise ValueError(f"--topk needs positive integers, got {args.topk!r}")
    k_max = k_values[-1]
    started = time.perf_counter()
    raw_patterns = mine_top_k(raw, k_max, args.max_pattern_len)
    sanitized_patterns = mine_top_k(sanitized, k_max, args.max_pattern_len)
    counts = []
    for k in k_values:
        tp, fp, fd = fsp_metrics(raw_patterns[:k], sanitized_patterns[:k], k)
        counts.append((k, tp, fp, fd))
    report = UtilityReport(fsp_counts=counts, runtime_seconds=time.perf_counter() - started)
    out, close = _open_output(args.output)
    try:
        writer = csv.writer(out)
        writer.writerow(
            ["k", "epsilon", "height", "variant", "true_positives", "false_positives",
             "false_drops", "mined_raw", "mined_sanitized"]
        )
        for k, tp, fp, fd in report.fsp_counts:
            writer.writerow(
                [k, args.epsilon_label, args.height_label, args.variant_label,
                 tp, fp, fd, min(k, len(raw_patterns)), min(k, len(sanitized_patterns))]
            )
    finally:
        if close:
            out.close()
    print(f"runtime_seconds={report.runtime_seconds:.3f}", file=sys.stderr)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    config_values = {}
    if args.config:
        import json

        with open(args.config, encoding="utf-8") as fh:
            config_values.update(json.load(fh))
    flag_values = {
        "n_locations": args.n_locations,
        "n_records": args.n_records,
        "avg_len": args.avg_len,
        "max_len": args.max_len,
        "n_planted_routes": args.n_planted_routes,
        "planted_fraction": args.planted_fraction,
        "route_length": args.route_length,
        "route_skew": args.route_skew,
        "zipf_skew": args.zipf_skew,
        "seed": args.seed,
    }
    config_values.update({k: v for k, v in flag_values.items() if v is not None})
    if "seed" not in config_values or config_values["seed"] is None:
        config_values["seed"] = _resolve_seed(None)
    config = GenConfig(**config_values)
    db, universe = generate(config)
    write_db(db, universe, args.output)
    if args.universe_out:
        write_universe(universe, args.universe_out)
    print(
        f"records={len(db)} universe={len(universe)} seed={config.seed} output={args.output}"
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    db, _ = load_db(args.input, args.universe)
    stats = release_stats(db)
    out, close = _open_output(args.output)
    try:
        writer = csv.writer(out)
        writer.writerow(["length", "count"])
        for length, count in stats.length_histogram.items():
            writer.writerow([length, count])
    finally:
        if close:
            out.close()
    summary = f"records={stats.records} distinct_locations={stats.distinct_locations}"
    print(summary, file=sys.stdout if close else sys.stderr)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dptraj",
        description="Sanitize trajectory databases under differential privacy "
        "and evaluate the released data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sanitize", help="produce a differentially private release")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--height", type=int, default=12)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--universe", default=None, help="public universe file, one token per line")
    p.add_argument("--variant", choices=VARIANTS, default="full")
    p.add_argument("--theta-mult", type=float, default=2.0, dest="theta_mult")
    p.add_argument("--expand-empty", action="store_true", dest="expand_empty")
    p.add_argument("--dump-tree", default=None, dest="dump_tree", metavar="PATH")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sanitize)

    p = sub.add_parser("eval-count", help="relative-error report over a random query workload")
    p.add_argument("--raw", required=True)
    p.add_argument("--sanitized", required=True)
    p.add_argument("--universe", default=None)
    p.add_argument("--height", type=int, default=12)
    p.add_argument("--queries-per-subset", type=int, default=10000, dest="queries_per_subset")
    p.add_argument(
        "--sanity-fraction", type=float, default=DEFAULT_SANITY_FRACTION, dest="sanity_fraction"
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.add_argument("--epsilon", default="", dest="epsilon_label", help="label echoed into the CSV")
    p.add_argument("--variant", default="", dest="variant_label", help="label echoed into the CSV")
    p.set_defaults(func=cmd_eval_count)

    p = sub.add_parser("eval-fsp", help="top-k sequential-pattern overlap report")
    p.add_argument("--raw", required=True)
    p.add_argument("--sanitized", required=True)
    p.add_argument("--universe", default=None)
    p.add_argument("--topk", default="100", help="comma-separated k values, e.g. 50,100,200")
    p.add_argument("--max-pattern-len", type=int, default=None, dest="max_pattern_len")
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.add_argument("--epsilon", default="", dest="epsilon_label", help="label echoed into the CSV")
    p.add_argument("--height", default="", dest="height_label", help="label echoed into the CSV")
    p.add_argument("--variant", default="", dest="variant_label", help="label echoed into the CSV")
    p.set_defaults(func=cmd_eval_fsp)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--output", required=True)
    p.add_argument("--universe-out", default=None, dest="universe_out")
    p.add_argument("--config", default=None, help="JSON file with GenConfig fields")
    p.add_argument("--n-locations", type=int, default=None, dest="n_locations")
    p.add_argument("--n-records", type=int, default=None, dest="n_records")
    p.add_argument("--avg-len", type=float, default=None, dest="avg_len")
    p.add_argument("--max-len", type=int, default=None, dest="max_len")
    p.add_argument("--n-planted-routes", type=int, default=None, dest="n_planted_routes")
    p.add_argument("--planted-fraction", type=float, default=None, dest="planted_fraction")
    p.add_argument("--route-length", type=int, default=None, dest="route_length")
    p.add_argument("--route-skew", type=float, default=None, dest="route_skew")
    p.add_argument("--zipf-skew", type=float, default=None, dest="zipf_skew")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("stats", help="length histogram of a trajectory file")
    p.add_argument("--input", required=True)
    p.add_argument("--universe", default=None)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnknownLocationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNIVERSE
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
