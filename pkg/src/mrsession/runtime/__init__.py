"""Concurrent multirole channel runtime and link combinators."""

from .core import (
    DEFAULT_WATCHDOG_MS,
    ChannelCore,
    Endpoint,
    Service,
    Uch,
    World,
    chan_create,
    payload_json,
    service_create,
    service_request,
    value_conforms,
)
from .links import (
    LINK3_CASES,
    chan2_link,
    chan2_link_create,
    chan3_link,
    link3_case,
    splice_link,
)

__all__ = [
    "DEFAULT_WATCHDOG_MS",
    "LINK3_CASES",
    "ChannelCore",
    "Endpoint",
    "Service",
    "Uch",
    "World",
    "chan2_link",
    "chan2_link_create",
    "chan3_link",
    "chan_create",
    "link3_case",
    "payload_json",
    "service_create",
    "service_request",
    "splice_link",
    "value_conforms",
]
