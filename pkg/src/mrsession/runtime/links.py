"""Link combinators: building multiparty sessions out of dyadic ones.

A party holding two channels of dual types can forward every message
from one onto the other (chan2_link), making the two outer parties talk
as if directly connected.  With three channels over groups whose
complements are pairwise disjoint the same works three ways
(chan3_link), which is what lets n-party sessions be assembled from
two-party coordination only.  splice_link short-circuits the dyadic
forwarder by exchanging conduit references between the two matrices, so
no relay agent stays behind.
"""

from __future__ import annotations

from ..errors import ComplementsNotDisjoint, SessionMismatch
from ..roles import Group, complements_disjoint, role_block
from ..session_types import (
    Action,
    BranchHead,
    CloseHead,
    SessionType,
    TransferHead,
    head_action,
)
from .core import Endpoint, World, _Redirect


def _require_dual(ep0: Endpoint, ep1: Endpoint) -> None:
    if ep0.group.universe != ep1.group.universe:
        raise SessionMismatch("endpoints live in different universes")
    if ep1.group != ep0.group.complement():
        raise SessionMismatch(f"groups {ep0.group} and {ep1.group} are not complementary")
    if ep0.cursor != ep1.cursor:
        raise SessionMismatch("endpoints are not at the same session")


def chan2_link(ep0: Endpoint, ep1: Endpoint) -> None:
    """Bidirectionally forward between two dual endpoints until both close.

    Runs in the calling agent and consumes both endpoints.
    """
    _require_dual(ep0, ep1)
    while True:
        head = head_action(ep0.group, ep0.cursor)
        if isinstance(head, CloseHead):
            ep0.close()
            ep1.close()
            return
        if isinstance(head, TransferHead):
            if head.action is Action.SEND:
                # receiving for ep1, then send on ep0
                value, ep1 = ep1.recv(head.src, head.dst)
                ep0 = ep0.send(head.src, head.dst, value)
            elif head.action is Action.RECV:
                value, ep0 = ep0.recv(head.src, head.dst)
                ep1 = ep1.send(head.src, head.dst, value)
            else:
                ep0 = ep0.skip()
                ep1 = ep1.skip()
            continue
        assert isinstance(head, BranchHead)
        if head.deciding:
            # the real decider faces ep1
            tag, ep1 = ep1.choose_tag()
            ep0 = ep0.choose_l() if tag == "L" else ep0.choose_r()
        else:
            tag, ep0 = ep0.choose_tag()
            ep1 = ep1.choose_l() if tag == "L" else ep1.choose_r()


# The nine-way dispatch of the three-way forwarder.  Blocks index the
# partition (complement(G0), complement(G1), G0 & G1) of the roles; the
# entry for (block of src, block of dst) lists what happens on each
# endpoint, with the receive always performed before the matching send.
LINK3_CASES = {
    (0, 0): ("skip", "skip", "skip"),
    (0, 1): ("recv", "send", "skip"),
    (0, 2): ("recv", "skip", "send"),
    (1, 0): ("send", "recv", "skip"),
    (1, 1): ("skip", "skip", "skip"),
    (1, 2): ("skip", "recv", "send"),
    (2, 0): ("send", "skip", "recv"),
    (2, 1): ("skip", "send", "recv"),
    (2, 2): ("skip", "skip", "skip"),
}


def link3_case(block_src: int, block_dst: int) -> tuple[str, str, str]:
    return LINK3_CASES[(block_src, block_dst)]


def _block_of(role: int, blocks: tuple[Group, Group, Group]) -> int:
    for idx, b in enumerate(blocks):
        if role in b:
            return idx
    raise AssertionError(f"role {role} not covered by the partition")


def chan3_link(ep0: Endpoint, ep1: Endpoint, ep2: Endpoint) -> None:
    """Forward between three endpoints whose groups partition the roles.

    Requires complement(G0) and complement(G1) disjoint and ep2 over
    their union; every message head touches each endpoint exactly once.
    """
    g0, g1 = ep0.group, ep1.group
    if not complements_disjoint(g0, g1):
        raise ComplementsNotDisjoint(f"complements of {g0} and {g1} overlap")
    if ep2.group != g0.complement().union(g1.complement()):
        raise SessionMismatch(
            f"third endpoint must cover {g0.complement().union(g1.complement())}, got {ep2.group}"
        )
    if not (ep0.cursor == ep1.cursor == ep2.cursor):
        raise SessionMismatch("endpoints are not at the same session")
    blocks = role_block(g0, g1)
    eps = [ep0, ep1, ep2]
    while True:
        head = head_action(eps[0].group, eps[0].cursor)
        if isinstance(head, CloseHead):
            for ep in eps:
                ep.close()
            return
        if isinstance(head, TransferHead):
            ops = link3_case(_block_of(head.src, blocks), _block_of(head.dst, blocks))
            if "recv" in ops:
                r = ops.index("recv")
                s = ops.index("send")
                value, eps[r] = eps[r].recv(head.src, head.dst)
                eps[s] = eps[s].send(head.src, head.dst, value)
                k = ops.index("skip")
                eps[k] = eps[k].skip()
            else:
                for k in range(3):
                    eps[k] = eps[k].skip()
            continue
        assert isinstance(head, BranchHead)
        facing = next(k for k in range(3) if head.decider not in eps[k].group)
        tag, eps[facing] = eps[facing].choose_tag()
        for k in range(3):
            if k != facing:
                eps[k] = eps[k].choose_l() if tag == "L" else eps[k].choose_r()


def chan2_link_create(ep0: Endpoint, ep1: Endpoint, name: str | None = None) -> Endpoint:
    """Create the channel that completes ep0/ep1 into a three-way session.

    Built exactly as a channel whose peer agent runs the three-way
    forwarder; returns the fresh endpoint over G0 & G1.
    """
    g0, g1 = ep0.group, ep1.group
    if not complements_disjoint(g0, g1):
        raise ComplementsNotDisjoint(f"complements of {g0} and {g1} overlap")
    if ep0.cursor != ep1.cursor:
        raise SessionMismatch("endpoints are not at the same session")
    world = ep0.world
    spawn_group = g0.complement().union(g1.complement())
    return world.chan_create(
        spawn_group,
        ep0.cursor,
        lambda x: chan3_link(ep0, ep1, x),
        moves=(ep0, ep1),
        name=name or "relay",
    )


def splice_link(ep0: Endpoint, ep1: Endpoint) -> None:
    """Connect two dual endpoints by exchanging conduit references.

    Behaviorally equivalent to chan2_link, but the caller's matrices are
    rewired so the outer parties talk directly and no forwarding agent
    persists.  Conduits the linker would have written are left with a
    sticky redirect so an already-parked outer reader migrates too.
    """
    _require_dual(ep0, ep1)
    ep0._claim()
    ep1._claim()
    world = ep0.world
    core0, core1 = ep0.core, ep1.core
    g = ep0.group
    comp = g.complement()
    first, second = (core0, core1) if core0.chan_id <= core1.chan_id else (core1, core0)
    with world._lock:
        ep0.consumed = True
        ep1.consumed = True
        with first.lock, second.lock:
            for i in g:
                for j in comp:
                    # the outer party of core0 reads (i,j); hand it core1's conduit
                    old0 = core0.cells[(i, j)]
                    keep1 = core1.cells[(i, j)]
                    core0.cells[(i, j)] = keep1
                    old0.redirect(keep1)
                    # the outer party of core1 reads (j,i); hand it core0's conduit
                    old1 = core1.cells[(j, i)]
                    keep0 = core0.cells[(j, i)]
                    core1.cells[(j, i)] = keep0
                    old1.redirect(keep0)
        world._side(ep0).retired = True
        world._side(ep1).retired = True
        world._merge(core0.chan_id, core1.chan_id)
        world._progress += 1
    world.emit("splice", [world.current_agent().aid], chan_id=core0.chan_id)
