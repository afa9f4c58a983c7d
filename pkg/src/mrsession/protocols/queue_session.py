"""Queue sessions: one server, two clients, shared size accounting.

Each round the server picks which client is served; the chosen client
announces one of three operations through the derived labeled choice
(stop / enqueue / dequeue), so the idle client can keep an accurate
account of the queue size without seeing any payload.  The protocol
terminates when a client announces stop, which the size discipline only
permits on an empty queue.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ScriptViolation
from ..roles import Group, RoleUniverse
from ..runtime import World, chan2_link_create
from ..session_types import INT, NIL, Choose, Msg, SessionType, labeled_choice

SERVER, C1, C2 = 0, 1, 2
OP_NIL, OP_ENQ, OP_DEQ = 0, 1, 2


@dataclass(frozen=True)
class QueueOp:
    client: int  # 1 or 2
    kind: str  # "nil" | "enq" | "deq"
    value: Optional[int] = None


def validate_script(script: list[QueueOp]) -> None:
    if not script:
        raise ScriptViolation("scripts must contain at least the terminating nil round")
    size = 0
    for idx, op in enumerate(script):
        if op.client not in (C1, C2):
            raise ScriptViolation(f"round {idx}: client must be 1 or 2")
        if op.kind == "enq":
            if op.value is None:
                raise ScriptViolation(f"round {idx}: enq needs a value")
            size += 1
        elif op.kind == "deq":
            if size == 0:
                raise ScriptViolation(f"round {idx}: deq on an empty queue")
            size -= 1
        elif op.kind == "nil":
            if size != 0:
                raise ScriptViolation(f"round {idx}: nil with {size} elements still queued")
            if idx != len(script) - 1:
                raise ScriptViolation(f"round {idx}: nil must be the last round")
        else:
            raise ScriptViolation(f"round {idx}: unknown op {op.kind!r}")
    if script[-1].kind != "nil":
        raise ScriptViolation("scripts must end with a nil round")


def queue_session(rounds: int) -> SessionType:
    """The protocol unfolded for a bounded number of rounds.

    The underlying protocol is recursive; a script of n rounds only ever
    walks n levels deep, so the continuation below the last reachable
    round is closed off with nil.
    """
    nxt: SessionType = NIL
    for _ in range(rounds):
        branches_by_client = []
        for client in (C1, C2):
            branches_by_client.append(
                labeled_choice(client, [
                    NIL,
                    Msg(client, SERVER, INT, nxt),
                    Msg(SERVER, client, INT, nxt),
                ])
            )
        nxt = Choose(SERVER, branches_by_client[0], branches_by_client[1])
    return nxt


@dataclass
class QueueOutcome:
    sizes: dict  # party -> per-round size account
    dequeued: list
    trace: list = field(default_factory=list, repr=False)
    leaked_endpoints: int = 0


def run_queue_session(script: list[QueueOp], watchdog_ms: Optional[int] = None) -> QueueOutcome:
    validate_script(script)
    universe = RoleUniverse(3)
    world = World(universe, watchdog_ms)
    session = queue_session(len(script))

    sizes: dict[int, list[int]] = {SERVER: [], C1: [], C2: []}
    dequeued: list[int] = []
    lock = threading.Lock()

    def server(ep):
        fifo: deque[int] = deque()
        for op in script:
            ep = ep.choose_l() if op.client == C1 else ep.choose_r()
            label, ep = ep.recv_label(3)
            if label == OP_ENQ:
                v, ep = ep.recv(op.client, SERVER)
                fifo.append(v)
            elif label == OP_DEQ:
                assert fifo, "script validation guarantees a nonempty queue"
                v = fifo.popleft()
                with lock:
                    dequeued.append(v)
                ep = ep.send(SERVER, op.client, v)
            with lock:
                sizes[SERVER].append(len(fifo))
            if label == OP_NIL:
                break
        ep.close()

    def client(me: int):
        def run(ep):
            my_ops = iter(op for op in script if op.client == me)
            size = 0
            while True:
                tag, ep = ep.choose_tag()
                served = C1 if tag == "L" else C2
                if served == me:
                    op = next(my_ops)
                    if op.kind == "nil":
                        ep = ep.select_label(OP_NIL, 3)
                        done = True
                    elif op.kind == "enq":
                        ep = ep.select_label(OP_ENQ, 3)
                        ep = ep.send(me, SERVER, op.value)
                        size += 1
                        done = False
                    else:
                        ep = ep.select_label(OP_DEQ, 3)
                        _, ep = ep.recv(SERVER, me)
                        size -= 1
                        done = False
                else:
                    label, ep = ep.recv_label(3)
                    if label == OP_ENQ:
                        ep = ep.skip()
                        size += 1
                    elif label == OP_DEQ:
                        ep = ep.skip()
                        size -= 1
                    done = label == OP_NIL
                with lock:
                    sizes[me].append(size)
                if done:
                    break
            ep.close()

        return run

    svc_server = world.service_create(server, Group(universe, [SERVER]), session, name="queue-server")
    svc_c1 = world.service_create(client(C1), Group(universe, [C1]), session, name="client1")

    ch0 = svc_server.request()  # chan({1,2}, S)
    ch1 = svc_c1.request()  # chan({0,2}, S)
    ep = chan2_link_create(ch0, ch1)  # chan({2}, S)
    client(C2)(ep)

    world.join()
    return QueueOutcome(
        sizes=sizes,
        dequeued=dequeued,
        trace=world.trace,
        leaked_endpoints=world.live_endpoint_count(),
    )
