"""Concurrent multirole channel runtime.

Agents are OS threads coordinated through one-directional rendezvous
conduits (uch).  A channel pair shares an nrole x nrole matrix of
conduits with one cell per boundary-crossing (i,j) ordered pair; each
endpoint owns a session cursor and every operation is monitored against
the cursor's head action, so a protocol deviation raises instead of
corrupting the peer.

Endpoints are linear: every operation consumes its handle and returns a
successor; a world-level registry tracks which agent owns which channel
side, which feeds the deadlock watchdog and the channel-set snapshots
consumed by the deadlock-freedom analyzer.
"""

from __future__ import annotations

import itertools
import os
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..df_analysis import ChannelHalf
from ..errors import (
    DeadlockDetected,
    EmptyGroup,
    IllFormedSession,
    InconsistentBroadcast,
    ProtocolViolation,
    SegmentIdentityViolation,
    SegmentIncomplete,
    UseAfterConsume,
)
from ..roles import Group, RoleUniverse
from ..session_types import (
    BOOL,
    INT,
    STR,
    UNIT,
    Action,
    Append,
    BaseSort,
    BranchHead,
    ChanSort,
    CloseHead,
    Nil,
    SessionType,
    Sort,
    TransferHead,
    TupleSort,
    head_action,
    head_normal,
    label_path,
    well_formed,
)

DEFAULT_WATCHDOG_MS = 2000
_POLL_S = 0.01


class DeadlockAbort(Exception):
    """Internal: a blocked wait was cancelled by the watchdog."""


@dataclass
class _Redirect:
    """Posted into an orphaned conduit so waiting readers move to its successor."""

    target: "Uch"


class Uch:
    """One-directional synchronous conduit: one writer, one reader.

    A write parks its value and blocks until the matching read takes it;
    a read blocks until a value is available.  Strict alternation is
    guaranteed by the session discipline of the callers.
    """

    __slots__ = ("_ready", "_taken", "_item")

    def __init__(self):
        self._ready = threading.Event()
        self._taken = threading.Event()
        self._item = None

    def write(self, world: "World", value) -> None:
        self._item = value
        self._ready.set()
        world._wait(self._taken)
        self._taken.clear()

    def read(self, world: "World"):
        world._wait(self._ready)
        value = self._item
        if isinstance(value, _Redirect):
            return value  # sticky; do not complete the handshake
        self._item = None
        self._ready.clear()
        self._taken.set()
        return value

    def redirect(self, target: "Uch") -> None:
        # the original writer is gone for good; wake any parked reader
        self._item = _Redirect(target)
        self._ready.set()


class ChannelCore:
    """State shared by the two endpoints of one channel: the conduit matrix."""

    def __init__(self, chan_id: int, universe: RoleUniverse, pos_group: Group):
        self.chan_id = chan_id
        self.universe = universe
        self.pos_group = pos_group  # side containing role 0
        self.lock = threading.Lock()
        self.cells: dict[tuple[int, int], Uch] = {}
        neg = pos_group.complement()
        for i in pos_group:
            for j in neg:
                self.cells[(i, j)] = Uch()
                self.cells[(j, i)] = Uch()

    def cell(self, i: int, j: int) -> Uch:
        with self.lock:
            return self.cells[(i, j)]

    def replace_cell(self, i: int, j: int, uch: Uch) -> None:
        with self.lock:
            self.cells[(i, j)] = uch


@dataclass
class AgentRecord:
    aid: int
    name: str
    thread: Optional[threading.Thread] = None
    state: str = "running"  # running | blocked | joining | done
    error: Optional[BaseException] = None


@dataclass
class SideRecord:
    chan_id: int
    positive: bool
    owner: int
    closed: bool = False
    retired: bool = False  # absorbed by a splice; not a leak, not live


class World:
    """A runtime instance: agents, channels, ownership, watchdog, trace."""

    def __init__(self, universe: RoleUniverse, watchdog_ms: Optional[int] = None):
        self.universe = universe
        if watchdog_ms is None:
            watchdog_ms = int(os.environ.get("MRSESSION_WATCHDOG_MS", DEFAULT_WATCHDOG_MS))
        self.watchdog_ms = watchdog_ms
        self._lock = threading.RLock()
        self._agents: dict[int, AgentRecord] = {}
        self._by_thread: dict[int, int] = {}
        self._sides: dict[tuple[int, bool], SideRecord] = {}
        self._parent: dict[int, int] = {}  # union-find over chan ids (splices)
        self._next_aid = itertools.count(0)
        self._next_chan = itertools.count(1)
        self._progress = 0
        self.aborted = False
        self._deadlock_snapshot = None
        self._shutdown = False
        self._watchdog: Optional[threading.Thread] = None
        self.trace: list[dict] = []
        self._register_agent("main", thread=None)

    # -- agents ---------------------------------------------------------------

    def _register_agent(self, name: str, thread) -> AgentRecord:
        with self._lock:
            aid = next(self._next_aid)
            rec = AgentRecord(aid, name, thread)
            self._agents[aid] = rec
            if thread is None:  # the creating (main) thread
                self._by_thread[threading.get_ident()] = aid
            return rec

    def current_agent(self) -> AgentRecord:
        with self._lock:
            aid = self._by_thread.get(threading.get_ident())
            if aid is None:
                # a foreign thread touched the world; treat it as main
                aid = 0
            return self._agents[aid]

    def spawn(self, name: str, fn: Callable[[], None], moves: tuple = (),
              setup: Optional[Callable[[AgentRecord], None]] = None) -> AgentRecord:
        """Start an agent.  `setup` runs under the lock before the thread does."""
        rec_holder: list[AgentRecord] = []

        def target():
            rec = rec_holder[0]
            with self._lock:
                self._by_thread[threading.get_ident()] = rec.aid
            try:
                fn()
            except DeadlockAbort:
                pass
            except BaseException as exc:  # noqa: BLE001 - reported via join
                with self._lock:
                    rec.error = exc
            finally:
                with self._lock:
                    rec.state = "done"

        thread = threading.Thread(target=target, name=name, daemon=True)
        rec = self._register_agent(name, thread)
        rec_holder.append(rec)
        with self._lock:
            for ep in moves:
                self._transfer_value(ep, rec.aid)
            if setup is not None:
                setup(rec)
            self._progress += 1
        self._ensure_watchdog()
        thread.start()
        return rec

    def join(self) -> None:
        """Wait for every spawned agent; report deadlocks and agent errors."""
        me = self.current_agent()
        with self._lock:
            me.state = "joining"
        try:
            for rec in list(self._agents.values()):
                if rec.thread is None:
                    continue
                while rec.thread.is_alive():
                    rec.thread.join(0.05)
        finally:
            with self._lock:
                me.state = "running"
                self._shutdown = True
        errors = [r.error for r in self._agents.values() if r.error is not None]
        if errors:
            raise errors[0]
        if self.aborted:
            raise DeadlockDetected(
                "all agents blocked on rendezvous with no matching pair",
                snapshot=self._deadlock_snapshot, trace=self.trace,
            )

    # -- watchdog ---------------------------------------------------------------

    def _ensure_watchdog(self) -> None:
        with self._lock:
            if self._watchdog is not None or self.watchdog_ms <= 0:
                return
            self._watchdog = threading.Thread(target=self._watch, daemon=True, name="watchdog")
            self._watchdog.start()

    def _watch(self) -> None:
        import time

        interval = max(self.watchdog_ms / 1000.0, 4 * _POLL_S)
        last = -1
        while True:
            if self._shutdown or self.aborted:
                return
            with self._lock:
                progress = self._progress
                live = [a for a in self._agents.values() if a.state != "done"]
                blocked = [a for a in live if a.state == "blocked"]
                stalled = (
                    progress == last
                    and blocked
                    and all(a.state in ("blocked", "joining") for a in live)
                )
                if stalled:
                    self._deadlock_snapshot = self.collection()
                    self.aborted = True
                    return
                last = progress
            time.sleep(interval)

    def _wait(self, event: threading.Event) -> None:
        rec = self.current_agent()
        with self._lock:
            rec.state = "blocked"
        try:
            while True:
                if self.aborted:
                    raise DeadlockAbort()
                if event.wait(_POLL_S):
                    return
        finally:
            with self._lock:
                if rec.state == "blocked":
                    rec.state = "running"

    # -- channels and ownership ---------------------------------------------------

    def _find(self, chan_id: int) -> int:
        root = chan_id
        while self._parent.get(root, root) != root:
            root = self._parent[root]
        while self._parent.get(chan_id, chan_id) != chan_id:
            self._parent[chan_id], chan_id = root, self._parent[chan_id]
        return root

    def _merge(self, a: int, b: int) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self._parent[max(ra, rb)] = min(ra, rb)

    def new_channel(self, group: Group, session: SessionType) -> "ChannelCore":
        if group.universe != self.universe:
            raise IllFormedSession("group universe differs from the world's")
        if group.is_empty() or group.complement().is_empty():
            raise EmptyGroup(f"group {group} or its complement is empty")
        if not well_formed(session, self.universe):
            raise IllFormedSession(f"ill-formed session {session}")
        with self._lock:
            cid = next(self._next_chan)
            pos_group = group if 0 in group else group.complement()
            return ChannelCore(cid, self.universe, pos_group)

    def _register_side(self, core: ChannelCore, group: Group, owner: int) -> None:
        with self._lock:
            positive = 0 in group
            self._sides[(core.chan_id, positive)] = SideRecord(core.chan_id, positive, owner)

    def _side(self, ep: "Endpoint") -> SideRecord:
        return self._sides[(ep.core.chan_id, 0 in ep.group)]

    def _transfer_value(self, value, new_owner: int) -> None:
        """Move ownership of every endpoint inside a payload value."""
        if isinstance(value, Endpoint):
            self._side(value).owner = new_owner
        elif isinstance(value, tuple):
            for item in value:
                self._transfer_value(item, new_owner)

    def live_endpoint_count(self) -> int:
        with self._lock:
            return sum(1 for s in self._sides.values() if not s.closed and not s.retired)

    def agents_alive(self) -> int:
        with self._lock:
            return sum(1 for a in self._agents.values() if a.thread is not None and a.state != "done")

    # -- snapshots and trace --------------------------------------------------------

    def channel_sets(self) -> list[set[ChannelHalf]]:
        with self._lock:
            excluded_roots = {
                self._find(s.chan_id)
                for s in self._sides.values()
                if s.closed and not s.retired
            }
            per_agent: dict[int, set[ChannelHalf]] = {
                aid: set() for aid, rec in self._agents.items() if rec.state != "done"
            }
            per_agent.setdefault(0, set())
            for s in self._sides.values():
                if s.closed or s.retired:
                    continue
                root = self._find(s.chan_id)
                if root in excluded_roots:
                    continue
                per_agent.setdefault(s.owner, set()).add(ChannelHalf(root, s.positive))
            return [per_agent[aid] for aid in sorted(per_agent)]

    def collection(self):
        from ..df_analysis import ChannelSetCollection

        return ChannelSetCollection(self.channel_sets())

    def rho_ch_lists(self) -> list[list[str]]:
        return [sorted(str(h) for h in s) for s in self.channel_sets()]

    def emit(self, rule: str, tids: list[int], chan_id: Optional[int] = None, payload=None) -> None:
        with self._lock:
            rec = {"step": len(self.trace), "rule": rule, "tids": tids, "rho_ch": self.rho_ch_lists()}
            if chan_id is not None:
                rec["chan_id"] = self._find(chan_id)
            if payload is not _NO_PAYLOAD:
                rec["payload"] = payload_json(payload)
            self.trace.append(rec)

    def bump(self) -> None:
        with self._lock:
            self._progress += 1

    # -- channel construction primitives -----------------------------------------

    def chan_create(self, group: Group, session: SessionType,
                    body: Callable[["Endpoint"], None], moves: tuple = (),
                    name: Optional[str] = None) -> "Endpoint":
        """Create a connected pair, run body on the group side in a new agent.

        Returns the complement-side endpoint.  Endpoints the body closes
        over must be listed in moves so ownership follows them.
        """
        core = self.new_channel(group, session)
        caller = self.current_agent()
        spawned_ep = Endpoint(self, core, group, session)
        kept_ep = Endpoint(self, core, group.complement(), session)
        agent_name = name or f"agent-{core.chan_id}"

        def run():
            body(spawned_ep)

        def register(rec):
            self._register_side(core, group, rec.aid)
            self._register_side(core, group.complement(), caller.aid)

        rec = self.spawn(agent_name, run, moves=moves, setup=register)
        self.emit("spawn", [caller.aid, rec.aid], chan_id=core.chan_id)
        return kept_ep

    def unsafe_chan2_create(self, body: Callable[["Endpoint", "Endpoint"], None],
                            g1: Group, s1: SessionType, g2: Group, s2: SessionType,
                            unsafe: bool = False) -> tuple["Endpoint", "Endpoint"]:
        """Create two pairs at once and hand both group sides to ONE agent.

        This generalization is exactly the construction that breaks the
        deadlock-freedom argument; it exists to demonstrate the failure
        and must be enabled explicitly.
        """
        if not unsafe:
            raise ProtocolViolation("chan2_create is unsafe; pass unsafe=True to demo it")
        caller = self.current_agent()
        core1, core2 = self.new_channel(g1, s1), self.new_channel(g2, s2)
        spawned = (Endpoint(self, core1, g1, s1), Endpoint(self, core2, g2, s2))
        kept = (
            Endpoint(self, core1, g1.complement(), s1),
            Endpoint(self, core2, g2.complement(), s2),
        )

        def run():
            body(spawned[0], spawned[1])

        def register(rec):
            for core, g in ((core1, g1), (core2, g2)):
                self._register_side(core, g, rec.aid)
                self._register_side(core, g.complement(), caller.aid)

        rec = self.spawn(f"agent-{core1.chan_id}x{core2.chan_id}", run, setup=register)
        self.emit("spawn", [caller.aid, rec.aid], chan_id=core1.chan_id)
        return kept

    def service_create(self, setup: Callable[["Endpoint"], None], group: Group,
                       session: SessionType, name: Optional[str] = None) -> "Service":
        # validate eagerly so a bad service fails at creation, not request
        self.new_channel(group, session)
        return Service(self, group, session, setup, name or f"service-{group}")


_NO_PAYLOAD = object()


@dataclass
class Service:
    """A reusable session generator: each request yields a fresh channel pair."""

    world: World
    group: Group
    session: SessionType
    setup: Callable[["Endpoint"], None]
    name: str
    _count: int = 0

    def request(self) -> "Endpoint":
        with self.world._lock:
            self._count += 1
            n = self._count
        return self.world.chan_create(
            self.group, self.session, self.setup, name=f"{self.name}#{n}"
        )


def service_create(world, setup, group, session, name=None) -> Service:
    return world.service_create(setup, group, session, name)


def service_request(svc: Service) -> "Endpoint":
    return svc.request()


# ---------------------------------------------------------------------------
# payload conformance

def value_conforms(value, sort: Sort) -> bool:
    if sort == UNIT:
        return value is None
    if sort == INT:
        return isinstance(value, int) and not isinstance(value, bool)
    if sort == BOOL:
        return isinstance(value, bool)
    if sort == STR:
        return isinstance(value, str)
    match sort:
        case ChanSort(group, proto):
            return (
                isinstance(value, Endpoint)
                and value.group == group
                and value.cursor == proto
            )
        case TupleSort(items):
            return (
                isinstance(value, tuple)
                and len(value) == len(items)
                and all(value_conforms(v, s) for v, s in zip(value, items))
            )
    return False


def payload_json(value):
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, Endpoint):
        side = "+" if 0 in value.group else "-"
        return f"chan:{value.core.chan_id}{side}"
    if isinstance(value, tuple):
        return [payload_json(v) for v in value]
    return f"<{type(value).__name__}>"


# ---------------------------------------------------------------------------
# endpoints

class Endpoint:
    """One live half of a multirole channel, at a given session cursor.

    Operations consume the handle and return the successor handle; a
    consumed handle (or one owned by another agent) raises on use.
    """

    __slots__ = ("world", "core", "group", "cursor", "consumed")

    def __init__(self, world: World, core: ChannelCore, group: Group, cursor: SessionType):
        self.world = world
        self.core = core
        self.group = group
        self.cursor = cursor
        self.consumed = False

    @property
    def chan_id(self) -> int:
        return self.core.chan_id

    def __repr__(self):
        state = "consumed" if self.consumed else "live"
        return f"<Endpoint chan={self.core.chan_id} group={self.group} {state}>"

    # -- internal helpers --

    def _claim(self) -> int:
        """Validate liveness/ownership; returns the acting agent id."""
        world = self.world
        with world._lock:
            if self.consumed:
                raise UseAfterConsume(f"{self!r} already consumed")
            side = world._side(self)
            me = world.current_agent().aid
            if side.owner != me:
                raise UseAfterConsume(
                    f"{self!r} belongs to agent {side.owner}, not {me} (was it delegated?)"
                )
            return me

    def _commit(self) -> None:
        with self.world._lock:
            self.consumed = True

    def _successor(self, cursor: SessionType) -> "Endpoint":
        return Endpoint(self.world, self.core, self.group, cursor)

    def _head(self):
        return head_action(self.group, self.cursor)

    def _read_cell(self, i: int, j: int):
        """Read (i,j), chasing conduit replacements installed by splices."""
        while True:
            cell = self.core.cell(i, j)
            value = cell.read(self.world)
            if isinstance(value, _Redirect):
                self.core.replace_cell(i, j, value.target)
                continue
            return value

    # -- session operations --

    def send(self, src: int, dst: int, value) -> "Endpoint":
        self._claim()
        head = self._head()
        if not (isinstance(head, TransferHead) and head.action is Action.SEND
                and (head.src, head.dst) == (src, dst)):
            raise ProtocolViolation(f"send({src},{dst}) does not match head {head} of {self!r}")
        if not value_conforms(value, head.sort):
            raise ProtocolViolation(f"payload {value!r} does not conform to sort {head.sort}")
        self._commit()
        self.core.cell(src, dst).write(self.world, ("data", src, dst, value))
        self.world.bump()
        return self._successor(head.rest)

    def recv(self, src: int, dst: int):
        me = self._claim()
        head = self._head()
        if not (isinstance(head, TransferHead) and head.action is Action.RECV
                and (head.src, head.dst) == (src, dst)):
            raise ProtocolViolation(f"recv({src},{dst}) does not match head {head} of {self!r}")
        self._commit()
        kind, esrc, edst, value = self._read_cell(src, dst)
        if kind != "data" or (esrc, edst) != (src, dst):
            raise InconsistentBroadcast(
                f"rendezvous mismatch: expected data ({src},{dst}), got {kind} ({esrc},{edst})"
            )
        world = self.world
        with world._lock:
            world._transfer_value(value, me)
        world.emit("msg", [me], chan_id=self.core.chan_id, payload=value)
        world.bump()
        return value, self._successor(head.rest)

    def skip(self) -> "Endpoint":
        me = self._claim()
        head = self._head()
        if not (isinstance(head, TransferHead)
                and head.action in (Action.INTERNAL, Action.EXTERNAL)):
            raise ProtocolViolation(f"skip does not match head {head} of {self!r}")
        self._commit()
        self.world.emit("skip", [me], chan_id=self.core.chan_id)
        return self._successor(head.rest)

    def close(self) -> None:
        me = self._claim()
        head = self._head()
        if not isinstance(head, CloseHead):
            raise ProtocolViolation(f"close on unfinished session {self.cursor}")
        self._commit()
        world = self.world
        with world._lock:
            world._side(self).closed = True
            world._progress += 1
        world.emit("close", [me], chan_id=self.core.chan_id)

    def _choose(self, take_left: bool) -> "Endpoint":
        me = self._claim()
        head = self._head()
        if not (isinstance(head, BranchHead) and head.deciding):
            raise ProtocolViolation(f"choose does not match head {head} of {self!r}")
        self._commit()
        tag = "L" if take_left else "R"
        for j in sorted(self.group.complement()):
            self.core.cell(head.decider, j).write(self.world, ("tag", head.decider, j, tag))
            self.world.bump()
        return self._successor(head.left if take_left else head.right)

    def choose_l(self) -> "Endpoint":
        return self._choose(True)

    def choose_r(self) -> "Endpoint":
        return self._choose(False)

    def choose_tag(self):
        me = self._claim()
        head = self._head()
        if not (isinstance(head, BranchHead) and not head.deciding):
            raise ProtocolViolation(f"choose_tag does not match head {head} of {self!r}")
        self._commit()
        tags = []
        for j in sorted(self.group):
            kind, esrc, edst, tag = self._read_cell(head.decider, j)
            if kind != "tag" or (esrc, edst) != (head.decider, j):
                raise InconsistentBroadcast(
                    f"expected tag ({head.decider},{j}), got {kind} ({esrc},{edst})"
                )
            self.world.emit("tag", [me], chan_id=self.core.chan_id, payload=tag)
            self.world.bump()
            tags.append(tag)
        if len(set(tags)) != 1:
            raise InconsistentBroadcast(f"replicated tags disagree: {tags}")
        return tags[0], self._successor(head.left if tags[0] == "L" else head.right)

    def append_segment(self, segment: Callable[["Endpoint"], "Endpoint"]) -> "Endpoint":
        """Run a one-shot segment over the first half of an append cursor.

        The segment must hand back the same channel, driven to nil; the
        identity requirement cannot be enforced by types here, so it is
        asserted dynamically.
        """
        self._claim()
        if not isinstance(self.cursor, Append):
            raise ProtocolViolation(f"append_segment needs an append cursor, got {self.cursor}")
        first, second = self.cursor.first, self.cursor.second
        self._commit()
        inner = self._successor(first)
        out = segment(inner)
        if not isinstance(out, Endpoint) or out.core is not self.core or out.group != self.group:
            raise SegmentIdentityViolation("segment returned a different channel")
        if out.consumed:
            raise UseAfterConsume("segment returned a consumed endpoint")
        if not isinstance(head_normal(out.cursor), Nil):
            raise SegmentIncomplete(f"segment stopped at {out.cursor}, not nil")
        out.consumed = True
        return self._successor(second)

    # -- derived labeled n-ary choice --

    def select_label(self, label: int, nbranches: int) -> "Endpoint":
        ep = self
        for step in label_path(label, nbranches):
            ep = ep.choose_l() if step == "L" else ep.choose_r()
        return ep

    def recv_label(self, nbranches: int):
        if nbranches == 1:
            return 0, self
        ep, label = self, 0
        while True:
            tag, ep = ep.choose_tag()
            if tag == "L":
                return label, ep
            label += 1
            if label == nbranches - 1:
                return label, ep


def chan_create(world: World, group: Group, session: SessionType, body, moves=(), name=None) -> Endpoint:
    return world.chan_create(group, session, body, moves=moves, name=name)
