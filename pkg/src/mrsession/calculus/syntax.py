"""Expression syntax for the linear multi-threaded calculus.

Expressions are immutable trees.  Channel halves appear as resource
constants; `rho` computes the multiset of resource constants inside an
expression, which drives both the linear typing side conditions and the
deadlock-freedom snapshots.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from ..roles import Group
from .types import Viewtype


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class FixVar(Expr):
    name: str


@dataclass(frozen=True)
class Unit(Expr):
    pass


UNITV = Unit()


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class StrLit(Expr):
    value: str


@dataclass(frozen=True)
class ChanConst(Expr):
    """A live channel half: resource constant ch+_n / ch-_n."""

    id: int
    positive: bool

    def __str__(self):
        return f"ch{self.id}{'+' if self.positive else '-'}"


@dataclass(frozen=True)
class Pair(Expr):
    fst: Expr
    snd: Expr


@dataclass(frozen=True)
class Fst(Expr):
    arg: Expr


@dataclass(frozen=True)
class Snd(Expr):
    arg: Expr


@dataclass(frozen=True)
class LetPair(Expr):
    x1: str
    x2: str
    bound: Expr
    body: Expr


@dataclass(frozen=True)
class Lam(Expr):
    param: str
    annot: Viewtype
    body: Expr
    linear: bool  # linear arrow (one-shot) vs intuitionistic


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(frozen=True)
class Fix(Expr):
    name: str
    annot: Viewtype
    body: Expr  # must be a syntactic value


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    els: Expr


@dataclass(frozen=True)
class CApp(Expr):
    """Application of a built-in constant function."""

    const: str
    args: tuple[Expr, ...]


# built-in constant functions; chan2_create only exists behind a flag
PURE_CONSTS = ("iadd", "randbit")
SPAWN_CONSTS = ("thread_create", "chan_create", "chan2_create")
CHAN_CONSTS = ("send", "recv", "skip", "close")
ALL_CONSTS = PURE_CONSTS + SPAWN_CONSTS + CHAN_CONSTS


def is_value(e: Expr) -> bool:
    match e:
        case Var(_) | Unit() | IntLit(_) | BoolLit(_) | StrLit(_) | ChanConst(_, _) | Lam(_, _, _, _):
            return True
        case Pair(a, b):
            return is_value(a) and is_value(b)
    return False


def rho(e: Expr) -> Counter:
    """Multiset of channel constants in e; if-branches are counted once.

    Cached on the (immutable) node; callers must not mutate the result.
    """
    cached = getattr(e, "_rho", None)
    if cached is not None:
        return cached
    match e:
        case ChanConst(_, _):
            out = Counter([e])
        case Var(_) | FixVar(_) | Unit() | IntLit(_) | BoolLit(_) | StrLit(_):
            out = _EMPTY_RHO
        case Pair(a, b) | App(a, b):
            out = rho(a) + rho(b)
        case Fst(a) | Snd(a):
            out = rho(a)
        case LetPair(_, _, bound, body):
            out = rho(bound) + rho(body)
        case Lam(_, _, body, _):
            out = rho(body)
        case Fix(_, _, body):
            out = rho(body)
        case If(cond, then, _):
            out = rho(cond) + rho(then)
        case CApp(_, args):
            out = Counter()
            for a in args:
                out += rho(a)
        case _:
            raise TypeError(f"not an expression: {e!r}")
    object.__setattr__(e, "_rho", out)
    return out


_EMPTY_RHO = Counter()


def chan_halves(e: Expr) -> frozenset[ChanConst]:
    """All channel constants occurring anywhere in e (branches included)."""
    cached = getattr(e, "_halves", None)
    if cached is not None:
        return cached
    match e:
        case ChanConst(_, _):
            out = frozenset((e,))
        case Pair(a, b) | App(a, b):
            out = chan_halves(a) | chan_halves(b)
        case Fst(a) | Snd(a):
            out = chan_halves(a)
        case LetPair(_, _, bound, body):
            out = chan_halves(bound) | chan_halves(body)
        case Lam(_, _, body, _) | Fix(_, _, body):
            out = chan_halves(body)
        case If(c, t, f):
            out = chan_halves(c) | chan_halves(t) | chan_halves(f)
        case CApp(_, args):
            out = frozenset()
            for a in args:
                out |= chan_halves(a)
        case _:
            out = frozenset()
    object.__setattr__(e, "_halves", out)
    return out


def free_vars(e: Expr) -> set[str]:
    match e:
        case Var(name) | FixVar(name):
            return {name}
        case Unit() | IntLit(_) | BoolLit(_) | StrLit(_) | ChanConst(_, _):
            return set()
        case Pair(a, b) | App(a, b):
            return free_vars(a) | free_vars(b)
        case Fst(a) | Snd(a):
            return free_vars(a)
        case LetPair(x1, x2, bound, body):
            return free_vars(bound) | (free_vars(body) - {x1, x2})
        case Lam(param, _, body, _):
            return free_vars(body) - {param}
        case Fix(name, _, body):
            return free_vars(body) - {name}
        case If(c, t, f):
            return free_vars(c) | free_vars(t) | free_vars(f)
        case CApp(_, args):
            out: set[str] = set()
            for a in args:
                out |= free_vars(a)
            return out
    raise TypeError(f"not an expression: {e!r}")


_fresh_counter = [0]


def _fresh(name: str) -> str:
    _fresh_counter[0] += 1
    return f"{name}%{_fresh_counter[0]}"


def substitute(e: Expr, subst: dict[str, Expr]) -> Expr:
    """Capture-avoiding simultaneous substitution for lam- and fix-variables."""
    if not subst:
        return e
    match e:
        case Var(name) | FixVar(name):
            return subst.get(name, e)
        case Unit() | IntLit(_) | BoolLit(_) | StrLit(_) | ChanConst(_, _):
            return e
        case Pair(a, b):
            return Pair(substitute(a, subst), substitute(b, subst))
        case App(a, b):
            return App(substitute(a, subst), substitute(b, subst))
        case Fst(a):
            return Fst(substitute(a, subst))
        case Snd(a):
            return Snd(substitute(a, subst))
        case LetPair(x1, x2, bound, body):
            bound2 = substitute(bound, subst)
            (x1, x2), body = _under_binders((x1, x2), body, subst)
            inner = {k: v for k, v in subst.items() if k not in (x1, x2)}
            return LetPair(x1, x2, bound2, substitute(body, inner))
        case Lam(param, annot, body, linear):
            (param,), body = _under_binders((param,), body, subst)
            inner = {k: v for k, v in subst.items() if k != param}
            return Lam(param, annot, substitute(body, inner), linear)
        case Fix(name, annot, body):
            (name,), body = _under_binders((name,), body, subst)
            inner = {k: v for k, v in subst.items() if k != name}
            return Fix(name, annot, substitute(body, inner))
        case If(c, t, f):
            return If(substitute(c, subst), substitute(t, subst), substitute(f, subst))
        case CApp(const, args):
            return CApp(const, tuple(substitute(a, subst) for a in args))
    raise TypeError(f"not an expression: {e!r}")


def _under_binders(names: tuple[str, ...], body: Expr, subst: dict[str, Expr]):
    """Rename binders that would capture free variables of the substitution."""
    danger: set[str] = set()
    for k, v in subst.items():
        if k not in names:
            danger |= free_vars(v)
    renames = {}
    out_names = []
    for n in names:
        if n in danger:
            n2 = _fresh(n)
            renames[n] = Var(n2)
            out_names.append(n2)
        else:
            out_names.append(n)
    if renames:
        body = substitute(body, renames)
    return tuple(out_names), body


def format_expr(e: Expr) -> str:
    """Compact single-line rendering, mainly for diagnostics."""
    match e:
        case Var(name) | FixVar(name):
            return name
        case Unit():
            return "()"
        case IntLit(v):
            return str(v)
        case BoolLit(v):
            return "true" if v else "false"
        case StrLit(v):
            return repr(v)
        case ChanConst(_, _):
            return str(e)
        case Pair(a, b):
            return f"(pair {format_expr(a)} {format_expr(b)})"
        case Fst(a):
            return f"(fst {format_expr(a)})"
        case Snd(a):
            return f"(snd {format_expr(a)})"
        case LetPair(x1, x2, bound, body):
            return f"(letpair {x1} {x2} {format_expr(bound)} {format_expr(body)})"
        case Lam(param, annot, body, linear):
            head = "llam" if linear else "lam"
            return f"({head} ({param} {annot}) {format_expr(body)})"
        case App(fn, arg):
            return f"(app {format_expr(fn)} {format_expr(arg)})"
        case Fix(name, annot, body):
            return f"(fix {name} {annot} {format_expr(body)})"
        case If(c, t, f):
            return f"(if {format_expr(c)} {format_expr(t)} {format_expr(f)})"
        case CApp(const, args):
            inner = " ".join(format_expr(a) for a in args)
            return f"({const} {inner})" if inner else f"({const})"
    raise TypeError(f"not an expression: {e!r}")
