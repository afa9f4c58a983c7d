"""Executable protocol examples; these double as integration tests."""

from .deadlock_demo import DeadlockDiagnostic, demo_chan2_create_deadlock, demo_two_safe_creates
from .queue_session import QueueOp, QueueOutcome, queue_session, run_queue_session, validate_script
from .streams import StreamOutcome, colist_session, list_session, run_colist_session, run_list_session
from .two_buyer import TwoBuyerOutcome, run_two_buyer, two_buyer_session

__all__ = [
    "DeadlockDiagnostic",
    "QueueOp",
    "QueueOutcome",
    "StreamOutcome",
    "TwoBuyerOutcome",
    "colist_session",
    "demo_chan2_create_deadlock",
    "demo_two_safe_creates",
    "list_session",
    "queue_session",
    "run_colist_session",
    "run_list_session",
    "run_queue_session",
    "run_two_buyer",
    "two_buyer_session",
    "validate_script",
]
