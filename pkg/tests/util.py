"""Shared test machinery: session generators, party scripts, delivery oracles."""

from __future__ import annotations

import random

from mrsession.roles import Group, RoleUniverse
from mrsession.session_types import (
    BOOL,
    INT,
    NIL,
    STR,
    UNIT,
    Action,
    Append,
    BranchHead,
    Choose,
    CloseHead,
    Msg,
    Repeat,
    SessionType,
    Sort,
    TransferHead,
    TupleSort,
    classify,
    head_action,
    head_normal,
)

BASE_SORTS = (UNIT, INT, BOOL, STR)


def gen_group(rng: random.Random, universe: RoleUniverse) -> Group:
    bits = rng.randrange(1, (1 << universe.nrole) - 1)
    return Group(universe, bits)


def gen_sort(rng: random.Random, allow_tuple=True) -> Sort:
    if allow_tuple and rng.random() < 0.15:
        return TupleSort((gen_sort(rng, False), gen_sort(rng, False)))
    return rng.choice(BASE_SORTS)


def gen_session(rng: random.Random, universe: RoleUniverse, depth: int,
                allow_choose=True, allow_repeat=False) -> SessionType:
    if depth <= 0:
        return NIL
    r = rng.random()
    if r < 0.12:
        return NIL
    if allow_choose and r < 0.32:
        return Choose(rng.randrange(universe.nrole),
                      gen_session(rng, universe, depth - 1, allow_choose, allow_repeat),
                      gen_session(rng, universe, depth - 1, allow_choose, allow_repeat))
    if r < 0.42 and depth >= 2:
        cut = rng.randrange(1, depth)
        return Append(gen_session(rng, universe, cut, allow_choose, allow_repeat),
                      gen_session(rng, universe, depth - cut, allow_choose, allow_repeat))
    if allow_repeat and r < 0.5:
        return Repeat(rng.randrange(universe.nrole),
                      gen_session(rng, universe, depth - 1, allow_choose, False))
    src, dst = rng.sample(range(universe.nrole), 2)
    return Msg(src, dst, gen_sort(rng),
               gen_session(rng, universe, depth - 1, allow_choose, allow_repeat))


def payload_for(seed: int, idx: int, sort: Sort):
    if sort == UNIT:
        return None
    if sort == INT:
        return (seed * 1009 + idx * 37) % 1000
    if sort == BOOL:
        return (seed + idx) % 2 == 0
    if sort == STR:
        return f"m{seed}.{idx}"
    if isinstance(sort, TupleSort):
        return tuple(payload_for(seed, idx * 7 + k + 1, s) for k, s in enumerate(sort.items))
    raise ValueError(f"no payload for {sort}")


def branch_for(seed: int, idx: int) -> str:
    return "L" if (seed * 13 + idx * 7) % 2 == 0 else "R"


def drive_party(ep, seed: int, log: list) -> None:
    """Run an endpoint to completion, logging deliveries and observed tags."""
    idx = 0
    while True:
        head = head_action(ep.group, ep.cursor)
        if isinstance(head, CloseHead):
            ep.close()
            return
        if isinstance(head, TransferHead):
            if head.action is Action.SEND:
                ep = ep.send(head.src, head.dst, payload_for(seed, idx, head.sort))
            elif head.action is Action.RECV:
                v, ep = ep.recv(head.src, head.dst)
                log.append((idx, head.src, head.dst, v))
            else:
                ep = ep.skip()
        else:
            assert isinstance(head, BranchHead)
            if head.deciding:
                ep = ep.choose_l() if branch_for(seed, idx) == "L" else ep.choose_r()
            else:
                tag, ep = ep.choose_tag()
                log.append((idx, "tag", tag))
        idx += 1


def expected_deliveries(group: Group, session: SessionType, seed: int) -> list:
    """Pure replay of what drive_party must log at an endpoint of this group."""
    log, idx, s = [], 0, session
    while True:
        s = head_normal(s)
        if isinstance(s, Msg):
            if classify(group, s.src, s.dst) is Action.RECV:
                log.append((idx, s.src, s.dst, payload_for(seed, idx, s.sort)))
            s = s.rest
        elif isinstance(s, Choose):
            tag = branch_for(seed, idx)
            if s.decider not in group:
                log.append((idx, "tag", tag))
            s = s.left if tag == "L" else s.right
        else:
            return log
        idx += 1


def three_way_groups(rng: random.Random, universe: RoleUniverse):
    """Groups (G0, G1) whose complements are disjoint, all blocks nonempty."""
    roles = list(universe.roles())
    rng.shuffle(roles)
    cut1 = rng.randrange(1, len(roles) - 1)
    cut2 = rng.randrange(cut1 + 1, len(roles))
    b0, b1, b2 = roles[:cut1], roles[cut1:cut2], roles[cut2:]
    g0 = Group(universe, b1 + b2)
    g1 = Group(universe, b0 + b2)
    return g0, g1
