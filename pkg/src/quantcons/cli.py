"""Command-line runner.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis
from .digraph import GraphError, read_priority_file
from .engine import AuditError, BoundViolation, ConfigurationError
from .protocol import ProtocolError
from .experiments import (
    ExperimentConfig,
    VerificationError,
    batch_table,
    dump_json,
    example_graph,
    example_table_text,
    replay_example,
    run_batch,
    run_single,
    run_table,
    series_csv,
)

OK, FAILED, BAD_CONFIG = 0, 1, 2


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _range(text: str) -> tuple[int, int]:
    lo, hi = _int_list(text.replace(":", " "))
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="quantcons",
        description="Event-triggered exact quantized average consensus simulator.",
    )
    p.add_argument("--mode", choices=["replay", "single", "batch"], default="replay")
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--edge-prob", type=float, default=0.2)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--graph-file", help="n on line 1, then 'u v' per arc u -> v (1-based)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--values", type=_int_list, help="explicit initial values, comma separated")
    g.add_argument("--values-file", help="whitespace separated initial values")
    p.add_argument("--value-range", type=_range, default=(0, 20), metavar="LO:HI")
    p.add_argument("--value-sum", type=int, help="pin the network sum of drawn values")
    p.add_argument("--fresh-values", action="store_true", help="batch: draw new values for every run")
    p.add_argument("--priorities", choices=["by_node_index", "seeded_shuffle", "file"], default="by_node_index")
    p.add_argument("--priorities-file", help="lines 'node neighbor priority' (1-based nodes)")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--confirm-rounds", type=int)
    p.add_argument("--backend", choices=["auto", "cython", "python", "engine"], default="auto")
    p.add_argument("--audit", action="store_true", help="check invariants after every round")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", help="single/replay: write per-message JSON lines here")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--format", choices=["json", "table"], default="table")
    p.add_argument("--series-csv", help="write per-round series as CSV here")
    e = p.add_argument_group("energy model")
    e.add_argument("--alpha3", type=float, default=50.0)
    e.add_argument("--alpha4", type=float, default=5.0)
    e.add_argument("--alpha11", type=float, default=45.0)
    e.add_argument("--alpha2", type=float, default=135.0)
    e.add_argument("--distance", type=float, default=1.0)
    e.add_argument("--path-loss-exponent", type=float, default=2.0)
    return p


def _config(args: argparse.Namespace) -> ExperimentConfig:
    values = args.values
    if args.values_file:
        values = _int_list(Path(args.values_file).read_text())
    priorities = "file" if args.priorities_file else args.priorities
    return ExperimentConfig(
        mode=args.mode,
        nodes=args.nodes,
        edge_probability=args.edge_prob,
        runs=args.runs,
        seed=args.seed,
        values=values,
        value_range=args.value_range,
        value_sum=args.value_sum,
        fresh_values=args.fresh_values,
        priorities=priorities,
        priorities_file=args.priorities_file,
        graph_file=args.graph_file,
        max_rounds=args.max_rounds,
        confirm_rounds=args.confirm_rounds,
        energy=analysis.EnergyParams(
            args.alpha3, args.alpha4, args.alpha11, args.alpha2, args.distance, args.path_loss_exponent
        ),
        backend=args.backend,
        audit=args.audit,
        workers=args.workers,
    )


def _replay(args) -> int:
    pr = read_priority_file(example_graph(), args.priorities_file) if args.priorities_file else None
    report, problems = replay_example(pr, confirm_rounds=args.confirm_rounds or 20)
    if args.format == "json" or args.out:
        doc = report.to_dict()
        doc["mode"] = "replay"
        doc["problems"] = problems
        dump_json(doc, args.out)
    if args.format == "table":
        sys.stdout.write(example_table_text(report.table[:6]))
    for line in problems:
        print(f"MISMATCH {line}", file=sys.stderr)
    q = report.final_states[0]
    print(f"{'PASS' if not problems else 'FAIL'}: final q_s = {q[0]}/{q[1]}, "
          f"scenario {report.scenario}, alpha = {report.alpha}", file=sys.stderr)
    return FAILED if problems else OK


def _single(args, cfg) -> int:
    trace = open(args.trace, "w") if args.trace else None
    try:
        report, doc = run_single(cfg, trace)
    finally:
        if trace:
            trace.close()
    if args.format == "json" or args.out:
        dump_json(doc, args.out)
    if args.format == "table":
        sys.stdout.write(run_table(report))
    if args.series_csv:
        Path(args.series_csv).write_text(series_csv(doc["series"]))
    for line in doc["problems"]:
        print(f"FAIL {line}", file=sys.stderr)
    return FAILED if doc["problems"] else OK


def _batch(args, cfg) -> int:
    batch = run_batch(cfg)
    doc = batch.to_dict()
    if args.format == "json" or args.out:
        dump_json(doc, args.out)
    if args.format == "table":
        sys.stdout.write(batch_table(batch))
    if args.series_csv:
        Path(args.series_csv).write_text(series_csv(batch.series))
    return OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.mode == "replay":
            return _replay(args)
        cfg = _config(args)
        return _single(args, cfg) if args.mode == "single" else _batch(args, cfg)
    except (ConfigurationError, GraphError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return BAD_CONFIG
    except (VerificationError, BoundViolation, AuditError, ProtocolError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
