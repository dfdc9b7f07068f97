"""Command line harness: replay, verify, benchmark and generate streams.

Exit codes: 0 success, 1 usage or stream errors, 2 invariant violation,
3 approximation-ratio or certificate violation.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from fractions import Fraction
from pathlib import Path

from .engine import DynamicCover
from .model import EXACT_RATIONAL, FAST_FLOAT, SetCoverError
from .streams import DECLARE, INSERT, PROFILES, gen, parse_stream
from .verifier import certify_ratio, check_invariants

_MODES = {"float": FAST_FLOAT, "exact": EXACT_RATIONAL}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(f"{self.prog}: {message}")


def _read_stream(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _apply_event(engine: DynamicCover, event, implicit: bool):
    """Returns a CoverDiff for updates, None for declarations."""
    if event.kind == DECLARE:
        engine.declare_set(event.set_id, event.cost)
        return None
    if event.kind == INSERT:
        if implicit:
            for sid in event.sets:
                if sid not in engine.system.sets:
                    engine.declare_set(sid, 1)
        return engine.insert(event.elem, event.sets)
    return engine.delete(event.elem)


def _summary(engine: DynamicCover) -> dict:
    stats = engine.stats()
    return {
        "max_f_observed": stats["max_f_observed"],
        "total_touched": stats["total_touched"],
        "updates": stats["updates"],
        "amortized_touched": stats["amortized_touched"],
    }


def cmd_run(args) -> int:
    header, events = parse_stream(_read_stream(args.stream))
    engine = DynamicCover(header.config(_MODES[args.mode]))
    out = sys.stdout
    updates = 0
    for idx, ev in enumerate(events, start=1):
        try:
            diff = _apply_event(engine, ev, args.implicit_sets)
        except SetCoverError as exc:
            print(f"op_index {idx}: {exc}", file=sys.stderr)
            return 1
        record = {
            "op_index": idx,
            "kind": ev.kind,
            "elem": ev.elem,
            "cover_size": len(engine.system.tight_ids),
            "cover_cost": float(engine.system.cover_cost_exact),
            "added": diff.added if diff else [],
            "removed": diff.removed if diff else [],
            "rebuild_level": diff.rebuild_level if diff else None,
            "touched": diff.touched if diff else 0,
        }
        out.write(json.dumps(record) + "\n")
        if diff is not None:
            updates += 1
            if args.verify_every and updates % args.verify_every == 0:
                report = check_invariants(engine.snapshot())
                if not report.ok:
                    print(f"op_index {idx}: invariant violation", file=sys.stderr)
                    for line in report.lines():
                        print(line, file=sys.stderr)
                    return 2
    out.write(json.dumps(_summary(engine)) + "\n")
    return 0


def cmd_verify(args) -> int:
    header, events = parse_stream(_read_stream(args.stream))
    engine = DynamicCover(header.config(EXACT_RATIONAL))
    updates = 0
    for idx, ev in enumerate(events, start=1):
        try:
            diff = _apply_event(engine, ev, args.implicit_sets)
        except SetCoverError as exc:
            print(f"op_index {idx}: {exc}", file=sys.stderr)
            return 1
        if diff is None:
            continue
        updates += 1
        report = check_invariants(engine.snapshot())
        if not report.ok:
            print(f"op_index {idx}: invariant violation", file=sys.stderr)
            for line in report.lines():
                print(line, file=sys.stderr)
            return 2
    print(f"ok: {updates} updates verified")
    return 0


def cmd_oracle(args) -> int:
    header, events = parse_stream(_read_stream(args.stream))
    engine = DynamicCover(header.config(EXACT_RATIONAL))
    for idx, ev in enumerate(events, start=1):
        try:
            _apply_event(engine, ev, args.implicit_sets)
        except SetCoverError as exc:
            print(f"op_index {idx}: {exc}", file=sys.stderr)
            return 1
    try:
        report = certify_ratio(engine.snapshot(), check_opt=True)
    except SetCoverError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for line in report.lines():
        print(line)
    return 0 if report.ok else 3


def cmd_bench(args) -> int:
    header, events = parse_stream(_read_stream(args.stream))
    mode = _MODES[args.mode]
    times = []
    engine = None
    for _ in range(max(1, args.reps)):
        engine = DynamicCover(header.config(mode))
        start = time.perf_counter()
        for ev in events:
            _apply_event(engine, ev, args.implicit_sets)
        times.append(time.perf_counter() - start)
    stats = engine.stats()
    updates = stats["updates"]
    per_update_us = statistics.median(times) / updates * 1e6 if updates else 0.0
    out = sys.stdout
    out.write(f"stat\tupdates\t{updates}\n")
    out.write(f"stat\tmedian_us_per_update\t{per_update_us:.3f}\n")
    out.write(f"stat\ttotal_touched\t{stats['total_touched']}\n")
    out.write(f"stat\tamortized_touched\t{stats['amortized_touched']:.3f}\n")
    out.write(f"stat\tmax_f_observed\t{stats['max_f_observed']}\n")
    out.write(f"stat\tcover_size\t{len(engine.system.tight_ids)}\n")
    out.write(f"stat\tcover_cost\t{float(engine.system.cover_cost_exact)}\n")
    for level, count in stats["rebuilds_by_level"].items():
        out.write(f"rebuilds\t{level}\t{count}\n")
    return 0


def cmd_gen(args) -> int:
    eps = Fraction(args.eps)
    C = Fraction(args.C)
    text = gen(args.profile, args.seed, n=args.n, m=args.m, f=args.f,
               eps=eps, C=C, ops=args.ops)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="levelcover",
                     description="dynamic weighted set cover over update streams")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="replay a stream, one JSON record per event")
    p.add_argument("stream", help="stream file, or - for stdin")
    p.add_argument("--mode", choices=sorted(_MODES), default="float")
    p.add_argument("--implicit-sets", action="store_true",
                   help="auto-declare unknown sets with cost 1")
    p.add_argument("--verify-every", type=int, default=0, metavar="N",
                   help="check invariants every N updates")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="replay in exact mode, checking every update")
    p.add_argument("stream")
    p.add_argument("--implicit-sets", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="replay in exact mode, certify the final cover")
    p.add_argument("stream")
    p.add_argument("--implicit-sets", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="time a stream replay, tab-separated stats")
    p.add_argument("stream")
    p.add_argument("--mode", choices=sorted(_MODES), default="float")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--implicit-sets", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate a workload stream")
    p.add_argument("--profile", choices=PROFILES, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="element scale / capacity")
    p.add_argument("--m", type=int, required=True, help="number of sets")
    p.add_argument("--f", type=int, required=True, help="max sets per element")
    p.add_argument("--eps", default="1/4", help="accuracy parameter, exact p/q")
    p.add_argument("--C", default="1", help="cost span: costs lie in [1/C, 1]")
    p.add_argument("--ops", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (SetCoverError, FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
