"""The one-seller-two-buyers protocol over three linked dyadic sessions.

Roles: seller=0, buyer1=1, buyer2=2.  Buyer 1 asks for a title and a
quote, tells buyer 2 how much it can contribute, and buyer 2 decides
whether to complete the purchase.  The three-party session is assembled
the standard way: two persistent services (seller, buyer 1), buyer 2
requests both and links the endpoints, obtaining a {2}-channel.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

from ..roles import Group, RoleUniverse
from ..runtime import World, chan2_link_create
from ..session_types import INT, NIL, STR, Choose, Msg, SessionType

S0, B1, B2 = 0, 1, 2


def two_buyer_session() -> SessionType:
    success = Msg(B2, S0, STR, Msg(S0, B2, STR, NIL))
    failure = NIL
    return Msg(
        B1, S0, STR,
        Msg(S0, B1, INT,
            Msg(S0, B2, INT,
                Msg(B1, B2, INT,
                    Choose(B2, success, failure)))),
    )


@dataclass
class TwoBuyerOutcome:
    branch: str  # "success" | "failure"
    receipt: Optional[str]
    messages: list  # ordered (src, dst, payload) as delivered
    trace: list = field(default_factory=list, repr=False)
    leaked_endpoints: int = 0


def run_two_buyer(title: str, price: int, contribution: int, b2_budget: int,
                  watchdog_ms: Optional[int] = None) -> TwoBuyerOutcome:
    if price < 0 or contribution < 0:
        raise ValueError("prices must be non-negative")
    universe = RoleUniverse(3)
    world = World(universe, watchdog_ms)
    session = two_buyer_session()
    log: list = []
    log_lock = threading.Lock()

    def record(src, dst, payload):
        with log_lock:
            log.append((src, dst, payload))

    def seller(ep):
        wanted, ep = ep.recv(B1, S0)
        record(B1, S0, wanted)
        ep = ep.send(S0, B1, price)
        ep = ep.send(S0, B2, price)
        ep = ep.skip()  # buyer-to-buyer contribution
        tag, ep = ep.choose_tag()
        if tag == "L":
            proof, ep = ep.recv(B2, S0)
            record(B2, S0, proof)
            ep = ep.send(S0, B2, f"receipt for {wanted}")
        ep.close()

    def buyer1(ep):
        ep = ep.send(B1, S0, title)
        quote, ep = ep.recv(S0, B1)
        record(S0, B1, quote)
        ep = ep.skip()  # seller quotes buyer 2
        ep = ep.send(B1, B2, contribution)
        tag, ep = ep.choose_tag()
        if tag == "L":
            ep = ep.skip()  # proof of payment
            ep = ep.skip()  # receipt
        ep.close()

    svc_seller = world.service_create(seller, Group(universe, [S0]), session, name="seller")
    svc_buyer1 = world.service_create(buyer1, Group(universe, [B1]), session, name="buyer1")

    ch0 = svc_seller.request()  # chan({1,2}, S)
    ch1 = svc_buyer1.request()  # chan({0,2}, S)
    ep = chan2_link_create(ch0, ch1)  # chan({2}, S)

    ep = ep.skip()  # title
    ep = ep.skip()  # quote to buyer 1
    quote, ep = ep.recv(S0, B2)
    record(S0, B2, quote)
    offered, ep = ep.recv(B1, B2)
    record(B1, B2, offered)

    receipt = None
    if quote - offered <= b2_budget:
        branch = "success"
        ep = ep.choose_l()
        ep = ep.send(B2, S0, f"payment of {quote - offered}")
        receipt, ep = ep.recv(S0, B2)
        record(S0, B2, receipt)
    else:
        branch = "failure"
        ep = ep.choose_r()
    ep.close()

    world.join()
    return TwoBuyerOutcome(
        branch=branch,
        receipt=receipt,
        messages=list(log),
        trace=world.trace,
        leaked_endpoints=world.live_endpoint_count(),
    )
