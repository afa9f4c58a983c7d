"""Seeded generation of well-typed pools for the interpreter.

Pools are built as a single channel-free main thread that creates
channels whose spawned bodies and local continuations are scripted
straight off the session type, so every generated pool typechecks by
construction.  Random pure-computation noise, thread spawning, and
endpoint delegation are mixed in to cover the whole rule set.  These
pools back the reduction/progress property tests and the fuzz verb.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import count

from .calculus import initial_pool
from .calculus import syntax as sx
from .calculus.semantics import PoolState
from .calculus.types import (
    T_BOOL,
    T_INT,
    T_UNIT,
    TArrow,
    TChan,
    Viewtype,
    sort_to_viewtype,
)
from .roles import Group, RoleUniverse
from .session_types import (
    BOOL,
    INT,
    NIL,
    UNIT,
    Action,
    Append,
    BranchHead,
    ChanSort,
    CloseHead,
    Msg,
    SessionType,
    Sort,
    TransferHead,
    head_action,
)

_BASE_SORTS = (UNIT, INT, BOOL)


def _lit(sort: Sort, rng: random.Random) -> sx.Expr:
    if sort == UNIT:
        return sx.UNITV
    if sort == INT:
        return sx.IntLit(rng.randrange(100))
    if sort == BOOL:
        return sx.BoolLit(rng.random() < 0.5)
    raise ValueError(f"no literal for sort {sort}")


def _seq(first_unit: sx.Expr, rest: sx.Expr, fresh) -> sx.Expr:
    return sx.App(sx.Lam(fresh("u"), T_UNIT, rest, True), first_unit)


def _let(name: str, annot: Viewtype, bound: sx.Expr, body: sx.Expr) -> sx.Expr:
    return sx.App(sx.Lam(name, annot, body, True), bound)


def _noise(rng: random.Random, fresh) -> sx.Expr:
    """A closed, resource-free expression of unit type."""
    pick = rng.randrange(5)
    if pick == 0:
        drop = sx.Lam(fresh("z"), T_INT, sx.UNITV, False)
        return sx.App(drop, sx.CApp("iadd", (sx.IntLit(rng.randrange(9)), sx.IntLit(rng.randrange(9)))))
    if pick == 1:
        return sx.If(sx.BoolLit(rng.random() < 0.5), sx.UNITV, sx.UNITV)
    if pick == 2:
        return sx.Fst(sx.Pair(sx.UNITV, sx.IntLit(rng.randrange(9))))
    if pick == 3:
        unroll = sx.Fix(fresh("f"), TArrow(T_UNIT, T_UNIT, False),
                        sx.Lam(fresh("x"), T_UNIT, sx.UNITV, False))
        return sx.App(unroll, sx.UNITV)
    drop = sx.Lam(fresh("z"), T_INT, sx.UNITV, False)
    return sx.App(drop, sx.CApp("randbit", ()))


def gen_session(rng: random.Random, universe: RoleUniverse, depth: int) -> SessionType:
    """A repeat-free message chain, occasionally glued with append."""
    if depth <= 0:
        return NIL
    if depth >= 2 and rng.random() < 0.2:
        cut = rng.randrange(1, depth)
        return Append(gen_session(rng, universe, cut), gen_session(rng, universe, depth - cut))
    src, dst = rng.sample(range(universe.nrole), 2)
    sort = rng.choice(_BASE_SORTS)
    return Msg(src, dst, sort, gen_session(rng, universe, depth - 1))


@dataclass
class _Obligation:
    var: str
    group: Group
    session: SessionType


def _script(obls: list[_Obligation], rng: random.Random, fresh,
            chan_payloads: dict[str, tuple[str, Viewtype]]) -> sx.Expr:
    """An expression that discharges every endpoint obligation, then ().

    chan_payloads maps an obligation variable to the (variable, type) of
    the endpoint that must be sent when its session head delegates.
    """
    if not obls:
        out = sx.UNITV
        if rng.random() < 0.4:
            out = _seq(_noise(rng, fresh), out, fresh)
        return out
    k = rng.randrange(len(obls))
    obl = obls[k]
    rest = obls[:k] + obls[k + 1:]
    head = head_action(obl.group, obl.session)
    if isinstance(head, CloseHead):
        inner = _script(rest, rng, fresh, chan_payloads)
        out = _seq(sx.CApp("close", (sx.Var(obl.var),)), inner, fresh)
    elif isinstance(head, TransferHead):
        nxt = _Obligation(fresh("c"), obl.group, head.rest)
        if head.action is Action.SEND:
            if isinstance(head.sort, ChanSort):
                pvar, _ = chan_payloads.pop(obl.var)
                payload: sx.Expr = sx.Var(pvar)
            else:
                payload = _lit(head.sort, rng)
            bound = sx.CApp("send", (sx.Var(obl.var), payload))
            inner = _script(rest + [nxt], rng, fresh, chan_payloads)
            out = _let(nxt.var, TChan(obl.group, head.rest), bound, inner)
        elif head.action is Action.RECV:
            vname = fresh("v")
            new_obls = rest + [nxt]
            if isinstance(head.sort, ChanSort):
                new_obls = new_obls + [_Obligation(vname, head.sort.group, head.sort.proto)]
            inner = _script(new_obls, rng, fresh, chan_payloads)
            out = sx.LetPair(vname, nxt.var, sx.CApp("recv", (sx.Var(obl.var),)), inner)
        else:  # internal or external
            bound = sx.CApp("skip", (sx.Var(obl.var),))
            inner = _script(rest + [nxt], rng, fresh, chan_payloads)
            out = _let(nxt.var, TChan(obl.group, head.rest), bound, inner)
    else:
        raise AssertionError(f"generator does not emit branching sessions: {head}")
    if rng.random() < 0.25:
        out = _seq(_noise(rng, fresh), out, fresh)
    return out


def _random_group(rng: random.Random, universe: RoleUniverse) -> Group:
    n = universe.nrole
    while True:
        bits = rng.randrange(1, (1 << n) - 1)  # nonempty, proper subset
        return Group(universe, bits)


def gen_pool(seed: int) -> PoolState:
    """A well-typed, channel-free-origin pool from a seed."""
    rng = random.Random(seed)
    universe = RoleUniverse(rng.randrange(2, 5))
    counter = count(1)

    def fresh(prefix: str) -> str:
        return f"{prefix}{next(counter)}"

    main_obls: list[_Obligation] = []
    chan_payloads: dict[str, tuple[str, Viewtype]] = {}
    creations: list[tuple[str, Viewtype, sx.Expr]] = []

    def make_channel(group: Group, session: SessionType, extra_spawned=()) -> str:
        """Plan one chan_create; returns the caller-side variable."""
        xvar = fresh("x")
        spawned = [_Obligation(xvar, group, session), *extra_spawned]
        body = sx.Lam(xvar, TChan(group, session),
                      _script(spawned, rng, fresh, chan_payloads), True)
        cvar = fresh("c")
        creations.append((cvar, TChan(group.complement(), session), sx.CApp("chan_create", (body,))))
        return cvar

    nchan = rng.randrange(1, 3)
    for _ in range(nchan):
        group = _random_group(rng, universe)
        session = gen_session(rng, universe, rng.randrange(1, 5))
        cvar = make_channel(group, session)
        main_obls.append(_Obligation(cvar, group.complement(), session))

    if rng.random() < 0.45:
        # a delegation: create an extra channel, then send our half away
        dg = _random_group(rng, universe)
        ds = gen_session(rng, universe, rng.randrange(1, 4))
        dvar = make_channel(dg, ds)
        held = dg.complement()

        carrier_group = _random_group(rng, universe)
        src = rng.choice(sorted(carrier_group.complement()))
        dst = rng.choice(sorted(carrier_group))
        carrier_session = Msg(src, dst, ChanSort(held, ds),
                              gen_session(rng, universe, rng.randrange(0, 3)))
        cvar = make_channel(carrier_group, carrier_session)
        chan_payloads[cvar] = (dvar, TChan(held, ds))
        main_obls.append(_Obligation(cvar, carrier_group.complement(), carrier_session))

    body = _script(main_obls, rng, fresh, chan_payloads)
    if rng.random() < 0.35:
        worker = sx.Lam(fresh("u"), T_UNIT, _noise(rng, fresh), True)
        body = _seq(sx.CApp("thread_create", (worker,)), body, fresh)
    for cvar, annot, bound in reversed(creations):
        body = _let(cvar, annot, bound, body)
    return initial_pool(body, universe)


def builtin_corpus() -> list[PoolState]:
    """Deterministic pool corpus used by the fuzz verb."""
    pools = []
    u2 = RoleUniverse(2)
    simple = sx.App(sx.Lam("x", T_UNIT, sx.Var("x"), True), sx.UNITV)
    pools.append(initial_pool(simple, u2))
    session = Msg(0, 1, INT, Msg(1, 0, BOOL, NIL))
    g0 = Group(u2, [0])
    body = sx.Lam(
        "c", TChan(g0, session),
        sx.App(sx.Lam(
            "c2", TChan(g0, Msg(1, 0, BOOL, NIL)),
            sx.LetPair("v", "c3", sx.CApp("recv", (sx.Var("c2"),)),
                       sx.CApp("close", (sx.Var("c3"),))),
            True), sx.CApp("send", (sx.Var("c"), sx.IntLit(3)))),
        True)
    main = sx.App(
        sx.Lam("c", TChan(g0.complement(), session),
               sx.LetPair("v", "c2", sx.CApp("recv", (sx.Var("c"),)),
                          sx.App(sx.Lam("c3", TChan(g0.complement(), NIL),
                                        sx.CApp("close", (sx.Var("c3"),)), True),
                                 sx.CApp("send", (sx.Var("c2"), sx.BoolLit(True))))),
               True),
        sx.CApp("chan_create", (body,)))
    pools.append(initial_pool(main, u2))
    pools.extend(gen_pool(seed) for seed in range(6))
    return pools
