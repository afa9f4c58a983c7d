"""The two-channels-one-agent deadlock, and its safe control experiment.

Creating two channel pairs in one call and handing both fresh halves to
a single agent looks like a harmless generalization of channel
creation, but it lets that agent end up holding both halves of one
channel: it then waits for a message only it could send.  The runtime
watchdog converts the hang into a diagnostic whose channel-set snapshot
is not DF-reducible, which is exactly how the analyzer flags it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..df_analysis import is_df_reducible
from ..errors import DeadlockDetected, ProtocolViolation
from ..roles import Group, RoleUniverse
from ..runtime import World
from ..session_types import INT, NIL, ChanSort, Msg


@dataclass
class DeadlockDiagnostic:
    deadlocked: bool
    snapshot: Optional[object]  # ChannelSetCollection at the stall
    snapshot_df_reducible: Optional[bool]
    trace: list = field(default_factory=list, repr=False)


def _sessions(universe: RoleUniverse):
    inner = Msg(1, 0, INT, NIL)  # the new agent waits for an int
    outer = Msg(1, 0, ChanSort(Group(universe, [1]), inner), NIL)
    return outer, inner


def demo_chan2_create_deadlock(watchdog_ms: int = 300, unsafe: bool = False) -> DeadlockDiagnostic:
    """Reproduce the deadlock; DeadlockDetected is the expected outcome."""
    if not unsafe:
        raise ProtocolViolation("this demo requires the unsafe flag")
    universe = RoleUniverse(2)
    world = World(universe, watchdog_ms)
    outer, inner = _sessions(universe)
    g0 = Group(universe, [0])

    def agent(c1, c2):
        # receive the dual of c2 over c1, then wait on c2 for a value
        # that only this agent could now send
        v, c1 = c1.recv(1, 0)
        c1.close()
        n, c2 = c2.recv(1, 0)
        c2.close()
        v = v.send(1, 0, n)  # never reached
        v.close()

    d1, d2 = world.unsafe_chan2_create(agent, g0, outer, g0, inner, unsafe=True)
    d1 = d1.send(1, 0, d2)
    d1.close()
    try:
        world.join()
    except DeadlockDetected as exc:
        reducible = is_df_reducible(exc.snapshot) if exc.snapshot is not None else None
        return DeadlockDiagnostic(True, exc.snapshot, reducible, world.trace)
    return DeadlockDiagnostic(False, None, None, world.trace)


def demo_two_safe_creates(watchdog_ms: int = 300) -> DeadlockDiagnostic:
    """The same wiring via two ordinary channel creations; completes fine."""
    universe = RoleUniverse(2)
    world = World(universe, watchdog_ms)
    outer, inner = _sessions(universe)
    g0 = Group(universe, [0])

    def inner_agent(c2):
        n, c2 = c2.recv(1, 0)
        c2.close()

    def outer_agent(c1):
        v, c1 = c1.recv(1, 0)
        c1.close()
        v = v.send(1, 0, 42)
        v.close()

    d2 = world.chan_create(g0, inner, inner_agent, name="inner")
    d1 = world.chan_create(g0, outer, outer_agent, name="outer")
    d1 = d1.send(1, 0, d2)
    d1.close()
    try:
        world.join()
    except DeadlockDetected as exc:
        reducible = is_df_reducible(exc.snapshot) if exc.snapshot is not None else None
        return DeadlockDiagnostic(True, exc.snapshot, reducible, world.trace)
    return DeadlockDiagnostic(False, None, None, world.trace)
