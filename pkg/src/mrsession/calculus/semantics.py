"""Small-step semantics for expressions and thread pools.

A pool maps thread ids to closed expressions; thread 0 is the main
thread.  Reduction is a labelled relation: PR0 steps one thread, PR1
spawns, PR2 collects a finished thread, PR3 allocates a channel pair
and spawns the peer, and the PR4 family synchronizes two matching
blocked threads on dual channel halves.  `enabled_choices` makes the
relation executable; `run_pool` drives it with a seeded scheduler and
emits the shared trace format.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from ..df_analysis import ChannelHalf
from ..errors import ChoiceNotEnabled, DeadlockDetected, StuckError, TypeCheckError
from ..roles import Group, RoleUniverse
from ..session_types import Msg, SessionType, head_normal
from . import syntax as sx
from .typecheck import Checker
from .types import T_UNIT, TChan, TTensor, Viewtype, fits

# ---------------------------------------------------------------------------
# decomposition into evaluation context + active position

_PARTIAL_KINDS = ("send", "recv", "skip", "close")


def decompose(e: sx.Expr):
    """Locate the active position of a non-value closed expression.

    Returns (kind, redex, plug) where plug rebuilds the whole expression
    around a replacement for the redex.  kind is one of "pure", "adhoc",
    "thread_create", "chan_create", "chan2_create", or a channel-op name
    (a partial redex).  Raises StuckError when no rule will ever apply.
    """
    if sx.is_value(e):
        return None

    def wrap(sub, rebuild):
        kind, redex, plug = sub
        return kind, redex, lambda x: rebuild(plug(x))

    match e:
        case sx.Pair(a, b):
            if not sx.is_value(a):
                return wrap(decompose(a), lambda x: sx.Pair(x, b))
            return wrap(decompose(b), lambda x: sx.Pair(a, x))
        case sx.Fst(a):
            if not sx.is_value(a):
                return wrap(decompose(a), lambda x: sx.Fst(x))
            if isinstance(a, sx.Pair):
                return ("pure", e, _identity)
            raise StuckError(f"fst of non-pair {sx.format_expr(a)}")
        case sx.Snd(a):
            if not sx.is_value(a):
                return wrap(decompose(a), lambda x: sx.Snd(x))
            if isinstance(a, sx.Pair):
                return ("pure", e, _identity)
            raise StuckError(f"snd of non-pair {sx.format_expr(a)}")
        case sx.LetPair(x1, x2, bound, body):
            if not sx.is_value(bound):
                return wrap(decompose(bound), lambda x: sx.LetPair(x1, x2, x, body))
            if isinstance(bound, sx.Pair):
                return ("pure", e, _identity)
            raise StuckError(f"letpair of non-pair {sx.format_expr(bound)}")
        case sx.App(fn, arg):
            if not sx.is_value(fn):
                return wrap(decompose(fn), lambda x: sx.App(x, arg))
            if not sx.is_value(arg):
                return wrap(decompose(arg), lambda x: sx.App(fn, x))
            if isinstance(fn, sx.Lam):
                return ("pure", e, _identity)
            raise StuckError(f"application of non-function {sx.format_expr(fn)}")
        case sx.Fix(_, _, _):
            return ("pure", e, _identity)
        case sx.If(cond, then, els):
            if not sx.is_value(cond):
                return wrap(decompose(cond), lambda x: sx.If(x, then, els))
            if isinstance(cond, sx.BoolLit):
                return ("pure", e, _identity)
            raise StuckError(f"if on non-boolean {sx.format_expr(cond)}")
        case sx.CApp(const, args):
            for i, a in enumerate(args):
                if not sx.is_value(a):
                    def rebuild(x, i=i):
                        return sx.CApp(const, args[:i] + (x,) + args[i + 1:])
                    return wrap(decompose(a), rebuild)
            if const in ("iadd", "randbit"):
                return ("adhoc", e, _identity)
            if const in ("thread_create", "chan_create", "chan2_create"):
                return (const, e, _identity)
            if const in _PARTIAL_KINDS:
                return (const, e, _identity)
            raise StuckError(f"unknown constant {const!r}")
        case sx.Var(name) | sx.FixVar(name):
            raise StuckError(f"free variable {name!r}")
    raise StuckError(f"cannot decompose {sx.format_expr(e)}")


def _identity(x: sx.Expr) -> sx.Expr:
    return x


def step_pure(redex: sx.Expr, rng: Optional[random.Random] = None) -> sx.Expr:
    """Reduct of a pure or ad-hoc redex."""
    match redex:
        case sx.If(sx.BoolLit(True), then, _):
            return then
        case sx.If(sx.BoolLit(False), _, els):
            return els
        case sx.LetPair(x1, x2, sx.Pair(v1, v2), body):
            return sx.substitute(body, {x1: v1, x2: v2})
        case sx.Fst(sx.Pair(v1, _)):
            return v1
        case sx.Snd(sx.Pair(_, v2)):
            return v2
        case sx.App(sx.Lam(param, _, body, _), arg):
            return sx.substitute(body, {param: arg})
        case sx.Fix(name, _, body):
            return sx.substitute(body, {name: redex})
        case sx.CApp("iadd", (sx.IntLit(a), sx.IntLit(b))):
            return sx.IntLit(a + b)
        case sx.CApp("randbit", ()):
            if rng is None:
                raise ValueError("randbit needs a seeded generator")
            return sx.IntLit(rng.randrange(2))
    raise StuckError(f"not a pure redex: {sx.format_expr(redex)}")


def step_expr(e: sx.Expr, rng: Optional[random.Random] = None) -> sx.Expr:
    """One pure/ad-hoc step of a single closed expression."""
    dec = decompose(e)
    if dec is None:
        raise StuckError("expression is already a value")
    kind, redex, plug = dec
    if kind not in ("pure", "adhoc"):
        raise StuckError(f"active position is a {kind}, not a pure redex")
    return plug(step_pure(redex, rng))


@dataclass(frozen=True)
class PartialRedex:
    kind: str
    chan: sx.ChanConst


def blocked(e: sx.Expr) -> Optional[PartialRedex]:
    """The partial redex e is waiting on, if any."""
    dec = decompose(e) if not sx.is_value(e) else None
    if dec is None:
        return None
    kind, redex, _ = dec
    if kind in _PARTIAL_KINDS:
        assert isinstance(redex, sx.CApp)
        ch = redex.args[0]
        assert isinstance(ch, sx.ChanConst)
        return PartialRedex(kind, ch)
    return None


# ---------------------------------------------------------------------------
# pools

@dataclass(frozen=True)
class ChannelInfo:
    pos_group: Group  # group implemented by the positive half (contains 0)
    session: SessionType  # residual session, positive side's point of view


@dataclass(frozen=True)
class PoolState:
    universe: RoleUniverse
    threads: dict[int, sx.Expr]
    chans: dict[int, ChannelInfo]
    next_tid: int = 1
    next_chan: int = 1
    allow_chan2: bool = False

    def channel_sets(self) -> list[set[ChannelHalf]]:
        return [
            {ChannelHalf(c.id, c.positive) for c in sx.chan_halves(self.threads[tid])}
            for tid in sorted(self.threads)
        ]

    def rho_ch_lists(self) -> list[list[str]]:
        return [sorted(str(h) for h in s) for s in self.channel_sets()]

    def is_final(self) -> bool:
        return set(self.threads) == {0} and sx.is_value(self.threads[0])


def initial_pool(main: sx.Expr, universe: RoleUniverse, allow_chan2: bool = False) -> PoolState:
    return PoolState(universe, {0: main}, {}, allow_chan2=allow_chan2)


def typecheck_pool(pool: PoolState) -> Viewtype:
    """Type the whole pool: main thread's type, every other thread unit."""
    counts = {}
    for tid, e in pool.threads.items():
        for c, n in sx.rho(e).items():
            counts[c] = counts.get(c, 0) + n
    for c, n in counts.items():
        if n > 1:
            raise TypeCheckError(f"channel half {c} occurs {n} times in the pool")
        if c.id not in pool.chans:
            raise TypeCheckError(f"channel half {c} is not live")
    checker = Checker(pool.chans, pool.allow_chan2)
    t0 = checker.check_closed(pool.threads[0])
    for tid in sorted(pool.threads):
        if tid == 0:
            continue
        t = checker.check_closed(pool.threads[tid])
        if not fits(t, T_UNIT):
            raise TypeCheckError(f"thread {tid} has type {t}, expected unit")
    return t0


class PoolTypeChecker:
    """Re-type pools along a reduction sequence, reusing untouched threads.

    A thread's type only depends on its expression and the live entries
    of the channels it mentions, so threads untouched by a step keep
    their previous type.  The previous pool is retained so object
    identity on expressions stays meaningful.  Agreement with the
    from-scratch checker is property-tested.
    """

    def __init__(self):
        self._prev: Optional[PoolState] = None
        self._types: dict[int, tuple] = {}

    def check(self, pool: PoolState) -> Viewtype:
        counts: dict = {}
        for e in pool.threads.values():
            for c, n in sx.rho(e).items():
                counts[c] = counts.get(c, 0) + n
        for c, n in counts.items():
            if n > 1:
                raise TypeCheckError(f"channel half {c} occurs {n} times in the pool")
            if c.id not in pool.chans:
                raise TypeCheckError(f"channel half {c} is not live")
        checker = Checker(pool.chans, pool.allow_chan2)
        types: dict[int, tuple] = {}
        for tid in sorted(pool.threads):
            e = pool.threads[tid]
            key = tuple(sorted(
                ((c.id, c.positive, pool.chans[c.id]) for c in sx.chan_halves(e)),
                key=lambda item: (item[0], item[1]),
            ))
            prev = self._types.get(tid)
            if prev is not None and prev[0] is e and prev[1] == key:
                t = prev[2]
            else:
                t = checker.check_closed(e)
            types[tid] = (e, key, t)
            if tid > 0 and not fits(t, T_UNIT):
                raise TypeCheckError(f"thread {tid} has type {t}, expected unit")
        self._prev = pool
        self._types = types
        return types[0][2]


@dataclass(frozen=True, order=True)
class ScheduleChoice:
    rule: str
    tid: int
    tid2: Optional[int] = None
    chan_id: Optional[int] = None


def enabled_choices(pool: PoolState) -> list[ScheduleChoice]:
    """Every rule instance applicable to the pool, in a stable order."""
    choices = []
    partials: dict[int, list] = {}
    for tid in sorted(pool.threads):
        e = pool.threads[tid]
        if sx.is_value(e):
            if tid > 0:
                choices.append(ScheduleChoice("PR2", tid))
            continue
        kind, redex, _ = decompose(e)
        if kind in ("pure", "adhoc"):
            choices.append(ScheduleChoice("PR0", tid))
        elif kind == "thread_create":
            choices.append(ScheduleChoice("PR1", tid))
        elif kind == "chan_create":
            choices.append(ScheduleChoice("PR3", tid))
        elif kind == "chan2_create":
            choices.append(ScheduleChoice("PR3-chan2", tid))
        else:
            ch = redex.args[0]
            partials.setdefault(ch.id, []).append((kind, tid, ch.positive))
    matching = {("send", "recv"), ("recv", "send"), ("skip", "skip"), ("close", "close")}
    for chan_id, entries in sorted(partials.items()):
        if len(entries) != 2:
            continue
        pos = next((x for x in entries if x[2]), None)
        neg = next((x for x in entries if not x[2]), None)
        if pos is None or neg is None:
            continue
        if (pos[0], neg[0]) in matching:
            choices.append(ScheduleChoice(f"PR4-{pos[0]}", pos[1], neg[1], chan_id))
    return sorted(choices)


def _advance(info: ChannelInfo) -> ChannelInfo:
    head = head_normal(info.session)
    assert isinstance(head, Msg)
    return ChannelInfo(info.pos_group, head.rest)


def step_pool(pool: PoolState, choice: ScheduleChoice, rng: Optional[random.Random] = None):
    """Apply one rule instance; returns (new pool, trace info dict)."""
    threads = dict(pool.threads)
    chans = dict(pool.chans)
    next_tid, next_chan = pool.next_tid, pool.next_chan
    info = {"rule": choice.rule, "tids": [choice.tid]}

    def active(tid):
        dec = decompose(threads[tid])
        if dec is None:
            raise ChoiceNotEnabled(f"thread {tid} is a value")
        return dec

    if choice.rule == "PR0":
        kind, redex, plug = active(choice.tid)
        if kind not in ("pure", "adhoc"):
            raise ChoiceNotEnabled(f"thread {choice.tid} is not at a pure redex")
        threads[choice.tid] = plug(step_pure(redex, rng))
    elif choice.rule == "PR1":
        kind, redex, plug = active(choice.tid)
        if kind != "thread_create":
            raise ChoiceNotEnabled("no thread_create at the active position")
        threads[choice.tid] = plug(sx.UNITV)
        threads[next_tid] = sx.App(redex.args[0], sx.UNITV)
        info["tids"] = [choice.tid, next_tid]
        next_tid += 1
    elif choice.rule == "PR2":
        e = threads.get(choice.tid)
        if choice.tid == 0 or e is None or not sx.is_value(e):
            raise ChoiceNotEnabled(f"thread {choice.tid} cannot be collected")
        del threads[choice.tid]
    elif choice.rule == "PR3":
        kind, redex, plug = active(choice.tid)
        if kind != "chan_create":
            raise ChoiceNotEnabled("no chan_create at the active position")
        lam = redex.args[0]
        annot = lam.annot
        assert isinstance(annot, TChan), "chan_create argument must carry a channel annotation"
        g, s = annot.group, annot.session
        positive = 0 in g
        spawned = sx.ChanConst(next_chan, positive)
        kept = sx.ChanConst(next_chan, not positive)
        chans[next_chan] = ChannelInfo(g if positive else g.complement(), s)
        threads[choice.tid] = plug(kept)
        threads[next_tid] = sx.App(lam, spawned)
        info |= {"tids": [choice.tid, next_tid], "chan_id": next_chan}
        next_tid += 1
        next_chan += 1
    elif choice.rule == "PR3-chan2":
        if not pool.allow_chan2:
            raise ChoiceNotEnabled("chan2_create is disabled")
        kind, redex, plug = active(choice.tid)
        if kind != "chan2_create":
            raise ChoiceNotEnabled("no chan2_create at the active position")
        lam = redex.args[0]
        annot = lam.annot
        assert isinstance(annot, TTensor)
        spawned, kept = [], []
        for part in (annot.fst, annot.snd):
            assert isinstance(part, TChan)
            g, s = part.group, part.session
            positive = 0 in g
            spawned.append(sx.ChanConst(next_chan, positive))
            kept.append(sx.ChanConst(next_chan, not positive))
            chans[next_chan] = ChannelInfo(g if positive else g.complement(), s)
            next_chan += 1
        threads[choice.tid] = plug(sx.Pair(kept[0], kept[1]))
        threads[next_tid] = sx.App(lam, sx.Pair(spawned[0], spawned[1]))
        info |= {"tids": [choice.tid, next_tid], "chan_id": spawned[0].id}
        next_tid += 1
    elif choice.rule.startswith("PR4-"):
        op = choice.rule[4:]
        kind1, redex1, plug1 = active(choice.tid)
        kind2, redex2, plug2 = active(choice.tid2)
        ch1, ch2 = redex1.args[0], redex2.args[0]
        if ch1.id != choice.chan_id or ch2.id != choice.chan_id or ch1.positive == ch2.positive:
            raise ChoiceNotEnabled("threads are not blocked on dual halves of the channel")
        expected = {"send": ("send", "recv"), "recv": ("recv", "send"),
                    "skip": ("skip", "skip"), "close": ("close", "close")}[op]
        if not ch1.positive:
            raise ChoiceNotEnabled("first thread of a PR4 step must hold the positive half")
        if (kind1, kind2) != expected:
            raise ChoiceNotEnabled(f"blocked operations {kind1}/{kind2} do not match rule {choice.rule}")
        info |= {"tids": [choice.tid, choice.tid2], "chan_id": choice.chan_id}
        if op == "close":
            threads[choice.tid] = plug1(sx.UNITV)
            threads[choice.tid2] = plug2(sx.UNITV)
            del chans[choice.chan_id]
        elif op == "skip":
            threads[choice.tid] = plug1(ch1)
            threads[choice.tid2] = plug2(ch2)
            chans[choice.chan_id] = _advance(chans[choice.chan_id])
        else:
            sender_redex, sender_plug, sender_ch = (redex1, plug1, ch1) if op == "send" else (redex2, plug2, ch2)
            recv_plug, recv_ch = (plug2, ch2) if op == "send" else (plug1, ch1)
            payload = sender_redex.args[1]
            if op == "send":
                threads[choice.tid] = sender_plug(sender_ch)
                threads[choice.tid2] = recv_plug(sx.Pair(payload, recv_ch))
            else:
                threads[choice.tid] = recv_plug(sx.Pair(payload, recv_ch))
                threads[choice.tid2] = sender_plug(sender_ch)
            chans[choice.chan_id] = _advance(chans[choice.chan_id])
            info["payload"] = payload_json(payload)
    else:
        raise ChoiceNotEnabled(f"unknown rule {choice.rule}")

    new_pool = replace(pool, threads=threads, chans=chans, next_tid=next_tid, next_chan=next_chan)
    return new_pool, info


def payload_json(v: sx.Expr):
    """JSON-friendly rendering of a transferred value."""
    match v:
        case sx.Unit():
            return None
        case sx.IntLit(x) | sx.StrLit(x):
            return x
        case sx.BoolLit(x):
            return x
        case sx.ChanConst(_, _):
            return str(v)
        case sx.Pair(a, b):
            return [payload_json(a), payload_json(b)]
        case _:
            return "<fun>"


@dataclass
class RunResult:
    status: str  # "final" | "max_steps"
    pool: PoolState
    trace: list[dict]


def run_pool(pool: PoolState, seed: int = 0, max_steps: int = 10_000,
             on_step: Optional[Callable[[PoolState, dict], None]] = None) -> RunResult:
    """Drive the pool with a uniform seeded scheduler until done.

    The trace starts with an init record and gains one record per step,
    each carrying the post-step rho_ch snapshot.  Deadlock (no enabled
    choice on a non-final pool) raises DeadlockDetected with the trace
    and blocked pool attached.
    """
    rng = random.Random(seed)
    records = [{"step": 0, "rule": "init", "tids": sorted(pool.threads), "rho_ch": pool.rho_ch_lists()}]
    for step in range(1, max_steps + 1):
        if pool.is_final():
            return RunResult("final", pool, records)
        choices = enabled_choices(pool)
        if not choices:
            from ..df_analysis import snapshot

            raise DeadlockDetected(
                f"no enabled choice at step {step}",
                snapshot=snapshot(pool), trace=records, pool=pool,
            )
        choice = rng.choice(choices)
        pool, info = step_pool(pool, choice, rng)
        rec = {"step": step, **info, "rho_ch": pool.rho_ch_lists()}
        records.append(rec)
        if on_step is not None:
            on_step(pool, rec)
    return RunResult("max_steps", pool, records)
