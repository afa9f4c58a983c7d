"""Leftover-style linear typechecking.

The declarative rules split the linear context nondeterministically
between subterms; here the linear context flows through the checker and
each use consumes its binding, so checking is deterministic and linear
time.  An expression is accepted exactly when some declarative split
exists: unused linear bindings surface as leftovers, double use as a
missing binding.
"""

from __future__ import annotations

from collections import Counter

from ..errors import IllFormedSession, TypeCheckError
from ..roles import Group
from ..session_types import (
    Action,
    BranchHead,
    CloseHead,
    TransferHead,
    head_action,
    well_formed,
)
from . import syntax as sx
from .types import (
    T_BOOL,
    T_INT,
    T_STR,
    T_UNIT,
    TArrow,
    TChan,
    TInt,
    TProd,
    TTensor,
    Viewtype,
    fits,
    is_linear,
    join,
    sort_to_viewtype,
)


class Checker:
    def __init__(self, chans=None, allow_chan2=False):
        # chans: id -> ChannelInfo(pos_group, session); types both halves
        self.chans = chans or {}
        self.allow_chan2 = allow_chan2

    # -- entry points -------------------------------------------------------

    def check_closed(self, e: sx.Expr) -> Viewtype:
        delta: dict[str, Viewtype] = {}
        t = self.check(e, {}, delta)
        if delta:
            raise TypeCheckError(f"unconsumed linear variables {sorted(delta)}")
        return t

    # -- the algorithm ------------------------------------------------------

    def check(self, e: sx.Expr, gamma: dict, delta: dict) -> Viewtype:
        match e:
            case sx.Var(name):
                if name in delta:
                    return delta.pop(name)
                if name in gamma:
                    return gamma[name]
                raise TypeCheckError(f"unbound variable {name!r} (or linear variable already used)")
            case sx.FixVar(name):
                if name in gamma:
                    return gamma[name]
                raise TypeCheckError(f"unbound fix variable {name!r}")
            case sx.Unit():
                return T_UNIT
            case sx.IntLit(v):
                return TInt(v)
            case sx.BoolLit(_):
                return T_BOOL
            case sx.StrLit(_):
                return T_STR
            case sx.ChanConst(cid, positive):
                info = self.chans.get(cid)
                if info is None:
                    raise TypeCheckError(f"channel {cid} is not live")
                group = info.pos_group if positive else info.pos_group.complement()
                return TChan(group, info.session)
            case sx.Pair(a, b):
                ta = self.check(a, gamma, delta)
                tb = self.check(b, gamma, delta)
                if is_linear(ta) or is_linear(tb):
                    return TTensor(ta, tb)
                return TProd(ta, tb)
            case sx.Fst(arg):
                t = self.check(arg, gamma, delta)
                if not isinstance(t, TProd):
                    raise TypeCheckError(f"fst needs an intuitionistic pair, got {t}")
                return t.fst
            case sx.Snd(arg):
                t = self.check(arg, gamma, delta)
                if not isinstance(t, TProd):
                    raise TypeCheckError(f"snd needs an intuitionistic pair, got {t}")
                return t.snd
            case sx.LetPair(x1, x2, bound, body):
                tb = self.check(bound, gamma, delta)
                if isinstance(tb, (TProd, TTensor)):
                    parts = (tb.fst, tb.snd)
                else:
                    raise TypeCheckError(f"letpair needs a pair, got {tb}")
                if x1 == x2:
                    raise TypeCheckError("letpair binders must be distinct")
                return self._with_bindings(((x1, parts[0]), (x2, parts[1])), e, body, gamma, delta)
            case sx.Lam(param, annot, body, linear):
                if linear:
                    t_body = self._with_bindings(((param, annot),), e, body, gamma, delta)
                    return TArrow(annot, t_body, True)
                if sx.rho(body):
                    raise TypeCheckError("non-linear function body contains channel constants")
                inner_delta: dict[str, Viewtype] = {}
                t_body = self._with_bindings(((param, annot),), e, body, gamma, inner_delta)
                if inner_delta:
                    raise TypeCheckError("non-linear function leaked linear bindings")
                return TArrow(annot, t_body, False)
            case sx.App(fn, arg):
                tf = self.check(fn, gamma, delta)
                ta = self.check(arg, gamma, delta)
                if not isinstance(tf, TArrow):
                    raise TypeCheckError(f"application of non-function type {tf}")
                if not fits(ta, tf.param):
                    raise TypeCheckError(f"argument type {ta} does not fit parameter {tf.param}")
                return tf.result
            case sx.Fix(name, annot, body):
                if is_linear(annot):
                    raise TypeCheckError(f"fix requires a non-linear type, got {annot}")
                if not sx.is_value(body):
                    raise TypeCheckError("fix body must be a syntactic value")
                inner_delta: dict[str, Viewtype] = {}
                saved = gamma.get(name, _MISSING)
                gamma[name] = annot
                try:
                    t = self.check(body, gamma, inner_delta)
                finally:
                    if saved is _MISSING:
                        del gamma[name]
                    else:
                        gamma[name] = saved
                if inner_delta:
                    raise TypeCheckError("fix body leaked linear bindings")
                if not fits(t, annot):
                    raise TypeCheckError(f"fix body has type {t}, annotation says {annot}")
                return annot
            case sx.If(cond, then, els):
                tc = self.check(cond, gamma, delta)
                if not fits(tc, T_BOOL):
                    raise TypeCheckError(f"if condition must be bool, got {tc}")
                if sx.rho(then) != sx.rho(els):
                    raise TypeCheckError("if branches hold different channel resources")
                base = dict(delta)
                t1 = self.check(then, gamma, delta)
                after1 = dict(delta)
                delta.clear()
                delta.update(base)
                t2 = self.check(els, gamma, delta)
                if delta != after1:
                    raise TypeCheckError("if branches consume different linear variables")
                tj = join(t1, t2)
                if tj is None:
                    raise TypeCheckError(f"if branches have incompatible types {t1} / {t2}")
                return tj
            case sx.CApp(const, args):
                arg_types = [self.check(a, gamma, delta) for a in args]
                return self._check_const(const, arg_types)
        raise TypeCheckError(f"unrecognized expression {e!r}")

    def _with_bindings(self, bindings, site, body, gamma, delta) -> Viewtype:
        """Check body with extra bindings, routing each by linearity."""
        saved = []
        for name, t in bindings:
            if is_linear(t):
                saved.append((name, "delta", delta.get(name, _MISSING)))
                delta[name] = t
            else:
                saved.append((name, "gamma", gamma.get(name, _MISSING)))
                gamma[name] = t
        try:
            t_body = self.check(body, gamma, delta)
            for name, kind, _ in saved:
                if kind == "delta" and name in delta:
                    raise TypeCheckError(f"linear variable {name!r} unused in {type(site).__name__}")
            return t_body
        finally:
            for name, kind, old in reversed(saved):
                ctx = delta if kind == "delta" else gamma
                if old is _MISSING:
                    ctx.pop(name, None)
                else:
                    ctx[name] = old

    # -- built-in constant signatures ----------------------------------------

    def _check_const(self, const: str, arg_types: list[Viewtype]) -> Viewtype:
        def arity(n):
            if len(arg_types) != n:
                raise TypeCheckError(f"{const} expects {n} arguments, got {len(arg_types)}")

        if const == "iadd":
            arity(2)
            a, b = arg_types
            if not (isinstance(a, TInt) and isinstance(b, TInt)):
                raise TypeCheckError(f"iadd needs integers, got {a}, {b}")
            if a.index is not None and b.index is not None:
                return TInt(a.index + b.index)
            return T_INT
        if const == "randbit":
            arity(0)
            return T_INT
        if const == "thread_create":
            arity(1)
            t = arg_types[0]
            if t != TArrow(T_UNIT, T_UNIT, True):
                raise TypeCheckError(f"thread_create needs a linear unit procedure, got {t}")
            return T_UNIT
        if const == "chan_create":
            arity(1)
            t = arg_types[0]
            if not (isinstance(t, TArrow) and t.linear and isinstance(t.param, TChan) and t.result == T_UNIT):
                raise TypeCheckError(f"chan_create needs a linear channel procedure, got {t}")
            g, s = t.param.group, t.param.session
            if g.is_empty() or g.complement().is_empty():
                raise TypeCheckError("channel group and its complement must be nonempty")
            if not well_formed(s, g.universe):
                raise TypeCheckError(f"ill-formed session {s}")
            return TChan(g.complement(), s)
        if const == "chan2_create":
            if not self.allow_chan2:
                raise TypeCheckError("chan2_create is disabled (unsafe; enable explicitly)")
            arity(1)
            t = arg_types[0]
            ok = (
                isinstance(t, TArrow)
                and t.linear
                and t.result == T_UNIT
                and isinstance(t.param, TTensor)
                and isinstance(t.param.fst, TChan)
                and isinstance(t.param.snd, TChan)
            )
            if not ok:
                raise TypeCheckError(f"chan2_create needs a linear procedure over two channels, got {t}")
            c1, c2 = t.param.fst, t.param.snd
            for c in (c1, c2):
                if c.group.is_empty() or c.group.complement().is_empty():
                    raise TypeCheckError("channel group and its complement must be nonempty")
            return TTensor(
                TChan(c1.group.complement(), c1.session),
                TChan(c2.group.complement(), c2.session),
            )
        if const in ("send", "recv", "skip", "close"):
            return self._check_chan_op(const, arg_types)
        raise TypeCheckError(f"unknown constant {const!r}")

    def _check_chan_op(self, const: str, arg_types: list[Viewtype]) -> Viewtype:
        expected_arity = 2 if const == "send" else 1
        if len(arg_types) != expected_arity:
            raise TypeCheckError(f"{const} expects {expected_arity} arguments")
        t0 = arg_types[0]
        if not isinstance(t0, TChan):
            raise TypeCheckError(f"{const} needs a channel, got {t0}")
        try:
            head = head_action(t0.group, t0.session)
        except IllFormedSession as exc:
            raise TypeCheckError(str(exc)) from exc
        if const == "close":
            if not isinstance(head, CloseHead):
                raise TypeCheckError(f"close on unfinished session {t0.session}")
            return T_UNIT
        if isinstance(head, BranchHead):
            raise TypeCheckError("branching sessions have no expression-level operators here")
        if not isinstance(head, TransferHead):
            raise TypeCheckError(f"{const} on finished session")
        if const == "send":
            if head.action is not Action.SEND:
                raise TypeCheckError(f"session head is {head.action.value}, not a send, on {t0}")
            want = sort_to_viewtype(head.sort)
            if not fits(arg_types[1], want):
                raise TypeCheckError(f"payload type {arg_types[1]} does not fit sort {head.sort}")
            return TChan(t0.group, head.rest)
        if const == "recv":
            if head.action is not Action.RECV:
                raise TypeCheckError(f"session head is {head.action.value}, not a receive, on {t0}")
            return TTensor(sort_to_viewtype(head.sort), TChan(t0.group, head.rest))
        # skip
        if head.action not in (Action.INTERNAL, Action.EXTERNAL):
            raise TypeCheckError(f"skip on a communicating head ({head.action.value})")
        return TChan(t0.group, head.rest)


_MISSING = object()


def typecheck(e: sx.Expr, chans=None, allow_chan2=False) -> Viewtype:
    return Checker(chans, allow_chan2).check_closed(e)


def check_value_purity(v: sx.Expr, chans=None) -> bool:
    """Closed values of non-linear type must hold no resources.

    Returns False only on a typechecker bug; used as a test oracle.
    """
    t = typecheck(v, chans)
    if is_linear(t):
        raise TypeCheckError(f"purity check only applies to non-linear types, got {t}")
    return not sx.rho(v)


def canonical_form_ok(v: sx.Expr, t: Viewtype) -> bool:
    """Does the shape of the closed value v match its viewtype?"""
    if not sx.is_value(v):
        return False
    match t:
        case TInt(_):
            return isinstance(v, sx.IntLit)
        case x if x == T_BOOL:
            return isinstance(v, sx.BoolLit)
        case x if x == T_STR:
            return isinstance(v, sx.StrLit)
        case x if x == T_UNIT:
            return isinstance(v, sx.Unit)
        case TChan(_, _):
            return isinstance(v, sx.ChanConst)
        case TProd(_, _) | TTensor(_, _):
            return isinstance(v, sx.Pair)
        case TArrow(_, _, _):
            return isinstance(v, sx.Lam)
    return False
