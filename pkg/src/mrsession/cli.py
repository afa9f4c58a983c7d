"""Command-line entry point: typecheck, run, analyze, fuzz.

Exit codes: 0 success, 1 rejection or violation found, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import df_analysis as dfa
from . import trace as trace_mod
from .calculus import parse_pool, run_pool, typecheck_pool
from .calculus.semantics import PoolTypeChecker
from .calculus.types import fits
from .errors import (
    DeadlockDetected,
    ScriptViolation,
    SessionSyntaxError,
    StuckError,
    TypeCheckError,
)

PROTOCOL_VERBS = ("two-buyer", "queue", "list", "colist", "deadlock-demo")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrsession", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_tc = sub.add_parser("typecheck", help="typecheck a pool term file")
    p_tc.add_argument("file")
    p_tc.add_argument("--nrole", type=int, default=None)
    p_tc.add_argument("--unsafe", action="store_true", help="admit chan2_create")

    p_run = sub.add_parser("run", help="run a pool file or a named protocol")
    run_sub = p_run.add_subparsers(dest="target", required=True)

    p_pool = run_sub.add_parser("pool", help="interpret a pool term file")
    p_pool.add_argument("file")
    p_pool.add_argument("--seed", type=int, default=0)
    p_pool.add_argument("--max-steps", type=int, default=10_000)
    p_pool.add_argument("--nrole", type=int, default=None)
    p_pool.add_argument("--unsafe", action="store_true")
    p_pool.add_argument("--trace", default=None)

    p_2b = run_sub.add_parser("two-buyer")
    p_2b.add_argument("--title", default="a book")
    p_2b.add_argument("--price", type=int, required=True)
    p_2b.add_argument("--contribution", type=int, required=True)
    p_2b.add_argument("--budget", type=int, required=True)
    p_2b.add_argument("--trace", default=None)

    p_q = run_sub.add_parser("queue")
    p_q.add_argument("--script", required=True, help="JSON file: [[client, op, value?], ...]")
    p_q.add_argument("--trace", default=None)

    for name in ("list", "colist"):
        p_s = run_sub.add_parser(name)
        p_s.add_argument("--n", type=int, required=True)
        p_s.add_argument("--trace", default=None)

    p_dd = run_sub.add_parser("deadlock-demo")
    p_dd.add_argument("--unsafe", action="store_true")
    p_dd.add_argument("--watchdog-ms", type=int, default=300)
    p_dd.add_argument("--trace", default=None)

    p_an = sub.add_parser("analyze", help="deadlock-freedom analysis")
    src = p_an.add_mutually_exclusive_group(required=True)
    src.add_argument("trace_file", nargs="?", help="a JSON-lines trace")
    src.add_argument("--collection", help="a literal like [{1+,2-},{2+,1-}]")

    p_fz = sub.add_parser("fuzz", help="seeded interpreter runs with metatheory checks")
    p_fz.add_argument("--seeds", type=int, required=True)
    p_fz.add_argument("--max-steps", type=int, default=4000)
    return parser


def _save_trace(records, path):
    if path:
        trace_mod.save_trace(records, path)


def _cmd_typecheck(args) -> int:
    text = open(args.file).read()
    try:
        pool = parse_pool(text, allow_chan2=args.unsafe, nrole=args.nrole)
        t = typecheck_pool(pool)
    except (SessionSyntaxError, TypeCheckError) as exc:
        print(f"rejected: {exc}")
        return 1
    print(f"ok: main thread has type {t}")
    return 0


def _cmd_run_pool(args) -> int:
    text = open(args.file).read()
    try:
        pool = parse_pool(text, allow_chan2=args.unsafe, nrole=args.nrole)
        typecheck_pool(pool)
    except (SessionSyntaxError, TypeCheckError) as exc:
        print(f"rejected: {exc}")
        return 1
    try:
        result = run_pool(pool, seed=args.seed, max_steps=args.max_steps)
    except DeadlockDetected as exc:
        _save_trace(exc.trace or [], args.trace)
        print(f"deadlock: {exc}; snapshot {exc.snapshot}")
        return 1
    _save_trace(result.trace, args.trace)
    print(f"{result.status} after {len(result.trace) - 1} steps")
    return 0


def _cmd_run_protocol(args) -> int:
    from . import protocols as proto

    if args.target == "two-buyer":
        out = proto.run_two_buyer(args.title, args.price, args.contribution, args.budget)
        _save_trace(out.trace, args.trace)
        print(json.dumps({"branch": out.branch, "receipt": out.receipt,
                          "messages": out.messages}))
        return 0
    if args.target == "queue":
        raw = json.load(open(args.script))
        script = [proto.QueueOp(item[0], item[1], item[2] if len(item) > 2 else None)
                  for item in raw]
        try:
            out = proto.run_queue_session(script)
        except ScriptViolation as exc:
            print(f"rejected: {exc}")
            return 1
        _save_trace(out.trace, args.trace)
        print(json.dumps({"sizes": out.sizes[0], "dequeued": out.dequeued}))
        return 0
    if args.target in ("list", "colist"):
        run = proto.run_list_session if args.target == "list" else proto.run_colist_session
        out = run(args.n)
        _save_trace(out.trace, args.trace)
        print(json.dumps({"values": out.values}))
        return 0
    if args.target == "deadlock-demo":
        if not args.unsafe:
            print("refusing: the deadlock demo needs --unsafe")
            return 2
        diag = proto.demo_chan2_create_deadlock(watchdog_ms=args.watchdog_ms, unsafe=True)
        _save_trace(diag.trace, args.trace)
        if diag.deadlocked:
            print(f"deadlock detected as expected; snapshot {diag.snapshot} "
                  f"(DF-reducible: {diag.snapshot_df_reducible})")
            return 0
        print("demo did not deadlock")
        return 1
    raise AssertionError(args.target)


def _cmd_analyze(args) -> int:
    if args.collection:
        try:
            coll = dfa.parse_collection(args.collection)
            ok = dfa.is_df_reducible(coll)
        except (ValueError, dfa.IrregularInput) as exc:
            print(f"rejected: {exc}")
            return 1
        print(f"{coll} is {'DF-reducible' if ok else 'not DF-reducible'}")
        return 0 if ok else 1
    records = trace_mod.load_trace(args.trace_file)
    report = dfa.check_trace_preservation(records)
    if report.ok:
        print(f"ok: {report.checked} snapshots, all DF-reducible")
        return 0
    print(f"violation: snapshot at step {report.first_violation_step} is not DF-reducible")
    return 1


def _cmd_fuzz(args) -> int:
    from .poolgen import builtin_corpus

    corpus = builtin_corpus()
    df_memo: dict = {}
    failures = 0
    for seed in range(args.seeds):
        pool = corpus[seed % len(corpus)]
        checker = PoolTypeChecker()
        try:
            prev = checker.check(pool)
        except TypeCheckError as exc:
            print(f"seed {seed}: corpus pool rejected: {exc}")
            failures += 1
            continue
        state = {"prev": prev, "bad": None}

        def on_step(p, rec, state=state, checker=checker):
            t = checker.check(p)
            if not fits(t, state["prev"]):
                state["bad"] = f"type {t} does not fit {state['prev']} ({rec['rule']})"
                raise StuckError(state["bad"])
            state["prev"] = t
            coll = dfa.ChannelSetCollection(p.channel_sets())
            if not dfa.is_df_reducible(coll, df_memo):
                state["bad"] = f"snapshot {coll} not DF-reducible ({rec['rule']})"
                raise StuckError(state["bad"])

        try:
            result = run_pool(pool, seed=seed, max_steps=args.max_steps, on_step=on_step)
            status = result.status
        except (DeadlockDetected, StuckError) as exc:
            print(f"seed {seed}: FAIL {state['bad'] or exc}")
            failures += 1
            continue
        print(f"seed {seed}: {status} ok")
    if failures:
        print(f"{failures}/{args.seeds} runs violated the metatheory checks")
        return 1
    print(f"all {args.seeds} runs preserved typing, progress, and DF-reducibility")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # allow `run FILE ...` as shorthand for `run pool FILE ...`
    if argv[:1] == ["run"] and len(argv) > 1 and argv[1] not in PROTOCOL_VERBS + ("pool", "-h", "--help"):
        argv.insert(1, "pool")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "typecheck":
        return _cmd_typecheck(args)
    if args.verb == "run":
        if args.target == "pool":
            return _cmd_run_pool(args)
        return _cmd_run_protocol(args)
    if args.verb == "analyze":
        return _cmd_analyze(args)
    if args.verb == "fuzz":
        return _cmd_fuzz(args)
    parser.error(f"unknown verb {args.verb}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
