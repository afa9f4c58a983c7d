"""Reference interpreter and linear typechecker for the channel calculus."""

from .semantics import (
    ChannelInfo,
    PoolState,
    RunResult,
    ScheduleChoice,
    blocked,
    decompose,
    enabled_choices,
    initial_pool,
    run_pool,
    step_expr,
    step_pool,
    typecheck_pool,
)
from .sexpr import parse_pool
from .syntax import rho
from .typecheck import Checker, canonical_form_ok, check_value_purity, typecheck

__all__ = [
    "ChannelInfo",
    "Checker",
    "PoolState",
    "RunResult",
    "ScheduleChoice",
    "blocked",
    "canonical_form_ok",
    "check_value_purity",
    "decompose",
    "enabled_choices",
    "initial_pool",
    "parse_pool",
    "rho",
    "run_pool",
    "step_expr",
    "step_pool",
    "typecheck",
    "typecheck_pool",
]
