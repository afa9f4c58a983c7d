"""List and colist sessions: indefinitely repeated unit protocols.

A list session repeats msg(0,1,int) under the server's control (the
server announces after each element whether more follow); a colist
session is the same wire protocol with the client deciding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..roles import Group, RoleUniverse
from ..runtime import World
from ..session_types import INT, NIL, Msg, Repeat, SessionType


def list_session() -> SessionType:
    return Repeat(0, Msg(0, 1, INT, NIL))


def colist_session() -> SessionType:
    return Repeat(1, Msg(0, 1, INT, NIL))


@dataclass
class StreamOutcome:
    values: list
    trace: list = field(default_factory=list, repr=False)
    leaked_endpoints: int = 0


def _element(k: int) -> int:
    return 10 * k + 7


def run_list_session(n: int, watchdog_ms: Optional[int] = None) -> StreamOutcome:
    """Server-driven stream: the server emits n elements, then stops."""
    if n < 0:
        raise ValueError("n must be non-negative")
    universe = RoleUniverse(2)
    world = World(universe, watchdog_ms)

    def server(ep):
        for k in range(n):
            ep = ep.choose_r()  # more elements follow
            ep = ep.send(0, 1, _element(k))
        ep = ep.choose_l()  # stop
        ep.close()

    ep = world.chan_create(Group(universe, [0]), list_session(), server, name="list-server")
    values = []
    while True:
        tag, ep = ep.choose_tag()
        if tag == "L":
            ep.close()
            break
        v, ep = ep.recv(0, 1)
        values.append(v)
    world.join()
    return StreamOutcome(values, world.trace, world.live_endpoint_count())


def run_colist_session(n: int, watchdog_ms: Optional[int] = None) -> StreamOutcome:
    """Client-driven stream: the client requests n elements, then stops."""
    if n < 0:
        raise ValueError("n must be non-negative")
    universe = RoleUniverse(2)
    world = World(universe, watchdog_ms)

    def server(ep):
        k = 0
        while True:
            tag, ep = ep.choose_tag()
            if tag == "L":
                ep.close()
                return
            ep = ep.send(0, 1, _element(k))
            k += 1

    ep = world.chan_create(Group(universe, [0]), colist_session(), server, name="colist-server")
    values = []
    for _ in range(n):
        ep = ep.choose_r()
        v, ep = ep.recv(0, 1)
        values.append(v)
    ep = ep.choose_l()
    ep.close()
    world.join()
    return StreamOutcome(values, world.trace, world.live_endpoint_count())
