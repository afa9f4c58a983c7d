"""S-expression concrete syntax for term files.

A file holds one pool:

    (pool (nrole 3)
      (thread 0 (app (llam (x unit) x) ()))
      ...)

or, for the common single-thread case,

    (pool (nrole 2) EXPR)

Expression forms: integers, true/false, "strings", () for unit,
(pair e e) (fst e) (snd e) (letpair x1 x2 e e) (if e e e)
(lam (x TY) e) (llam (x TY) e) (fix f TY v) (app e e)
and the constants (iadd e e) (randbit) (thread-create e)
(chan-create e) (chan2-create e) (send e e) (recv e) (skip e) (close e).

Types: unit, int, (int 4), bool, str, (prod T T), (tensor T T),
(-> T T), (-o T T), (chan (ROLES...) SESSION).
Sessions: nil, (msg i j SORT S), (choose i S S), (append S S),
(repeat i S); sorts are unit/int/bool/str/(chan (ROLES...) S)/(tuple SORT...).
"""

from __future__ import annotations

from ..errors import SessionSyntaxError
from ..roles import Group, RoleUniverse
from ..session_types import (
    BOOL,
    INT,
    NIL,
    STR,
    UNIT,
    Append,
    ChanSort,
    Choose,
    Msg,
    Repeat,
    SessionType,
    Sort,
    TupleSort,
)
from . import syntax as sx
from .semantics import PoolState
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
)


def tokenize(text: str) -> list[str]:
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        elif c in "()":
            out.append(c)
            i += 1
        elif c == '"':
            j = i + 1
            while j < len(text) and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            if j >= len(text):
                raise SessionSyntaxError("unterminated string", i)
            out.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in '();"':
                j += 1
            out.append(text[i:j])
            i = j
    return out


def read_sexpr(tokens: list[str], pos: int = 0):
    if pos >= len(tokens):
        raise SessionSyntaxError("unexpected end of input", pos)
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = read_sexpr(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise SessionSyntaxError("missing )", pos)
        return items, pos + 1
    if tok == ")":
        raise SessionSyntaxError("unexpected )", pos)
    return tok, pos + 1


def _as_int(atom) -> int:
    if not isinstance(atom, str):
        raise SessionSyntaxError(f"expected a number, got {atom!r}", 0)
    try:
        return int(atom)
    except ValueError:
        raise SessionSyntaxError(f"expected a number, got {atom!r}", 0) from None


def parse_type(form, universe: RoleUniverse) -> Viewtype:
    if isinstance(form, str):
        table = {"unit": T_UNIT, "int": T_INT, "bool": T_BOOL, "str": T_STR}
        if form in table:
            return table[form]
        raise SessionSyntaxError(f"unknown type {form!r}", 0)
    head = form[0]
    if head == "int":
        return TInt(_as_int(form[1]))
    if head in ("prod", "tensor", "->", "-o"):
        a, b = parse_type(form[1], universe), parse_type(form[2], universe)
        if head == "prod":
            return TProd(a, b)
        if head == "tensor":
            return TTensor(a, b)
        return TArrow(a, b, head == "-o")
    if head == "chan":
        group = Group(universe, [_as_int(r) for r in form[1]])
        return TChan(group, parse_session_form(form[2], universe))
    raise SessionSyntaxError(f"unknown type form {head!r}", 0)


def parse_session_form(form, universe: RoleUniverse) -> SessionType:
    if form == "nil":
        return NIL
    head = form[0]
    if head == "msg":
        return Msg(_as_int(form[1]), _as_int(form[2]),
                   parse_sort_form(form[3], universe),
                   parse_session_form(form[4], universe))
    if head == "choose":
        return Choose(_as_int(form[1]),
                      parse_session_form(form[2], universe),
                      parse_session_form(form[3], universe))
    if head == "append":
        return Append(parse_session_form(form[1], universe),
                      parse_session_form(form[2], universe))
    if head == "repeat":
        return Repeat(_as_int(form[1]), parse_session_form(form[2], universe))
    raise SessionSyntaxError(f"unknown session form {head!r}", 0)


def parse_sort_form(form, universe: RoleUniverse) -> Sort:
    if isinstance(form, str):
        table = {"unit": UNIT, "int": INT, "bool": BOOL, "str": STR}
        if form in table:
            return table[form]
        raise SessionSyntaxError(f"unknown sort {form!r}", 0)
    if form[0] == "chan":
        group = Group(universe, [_as_int(r) for r in form[1]])
        return ChanSort(group, parse_session_form(form[2], universe))
    if form[0] == "tuple":
        return TupleSort(tuple(parse_sort_form(f, universe) for f in form[1:]))
    raise SessionSyntaxError(f"unknown sort form {form[0]!r}", 0)


_CONSTS = {
    "iadd": ("iadd", 2),
    "randbit": ("randbit", 0),
    "thread-create": ("thread_create", 1),
    "chan-create": ("chan_create", 1),
    "chan2-create": ("chan2_create", 1),
    "send": ("send", 2),
    "recv": ("recv", 1),
    "skip": ("skip", 1),
    "close": ("close", 1),
}


def parse_expr(form, universe: RoleUniverse, lam_scope=frozenset(), fix_scope=frozenset()) -> sx.Expr:
    if isinstance(form, str):
        if form == "true":
            return sx.BoolLit(True)
        if form == "false":
            return sx.BoolLit(False)
        if form.startswith('"'):
            return sx.StrLit(form[1:-1])
        try:
            return sx.IntLit(int(form))
        except ValueError:
            pass
        if form in lam_scope:
            return sx.Var(form)
        if form in fix_scope:
            return sx.FixVar(form)
        raise SessionSyntaxError(f"unbound variable {form!r}", 0)
    if form == []:
        return sx.UNITV

    def sub(f, lam=None, fix=None):
        return parse_expr(f, universe, lam or lam_scope, fix or fix_scope)

    head = form[0]
    if head == "pair":
        return sx.Pair(sub(form[1]), sub(form[2]))
    if head == "fst":
        return sx.Fst(sub(form[1]))
    if head == "snd":
        return sx.Snd(sub(form[1]))
    if head == "letpair":
        x1, x2 = form[1], form[2]
        inner = lam_scope | {x1, x2}
        return sx.LetPair(x1, x2, sub(form[3]), sub(form[4], lam=inner))
    if head == "if":
        return sx.If(sub(form[1]), sub(form[2]), sub(form[3]))
    if head in ("lam", "llam"):
        (param, ty) = form[1]
        annot = parse_type(ty, universe)
        body = sub(form[2], lam=lam_scope | {param})
        return sx.Lam(param, annot, body, linear=head == "llam")
    if head == "fix":
        name, ty = form[1], parse_type(form[2], universe)
        body = sub(form[3], fix=fix_scope | {name})
        return sx.Fix(name, ty, body)
    if head == "app":
        return sx.App(sub(form[1]), sub(form[2]))
    if isinstance(head, str) and head in _CONSTS:
        const, arity = _CONSTS[head]
        args = form[1:]
        if len(args) != arity:
            raise SessionSyntaxError(f"{head} takes {arity} arguments, got {len(args)}", 0)
        return sx.CApp(const, tuple(sub(a) for a in args))
    raise SessionSyntaxError(f"unknown expression form {head!r}", 0)


def parse_pool(text: str, allow_chan2: bool = False, nrole: int | None = None) -> PoolState:
    """Parse a term file into an initial pool."""
    tokens = tokenize(text)
    form, pos = read_sexpr(tokens)
    if pos != len(tokens):
        raise SessionSyntaxError("trailing input after pool", pos)
    if not (isinstance(form, list) and form and form[0] == "pool"):
        raise SessionSyntaxError("term files must contain a single (pool ...)", 0)
    body = form[1:]
    file_nrole = None
    if body and isinstance(body[0], list) and body[0][:1] == ["nrole"]:
        file_nrole = _as_int(body[0][1])
        body = body[1:]
    if nrole is not None and file_nrole is not None and nrole != file_nrole:
        raise SessionSyntaxError(f"file declares nrole {file_nrole}, caller requested {nrole}", 0)
    universe = RoleUniverse(nrole or file_nrole or 3)
    threads = {}
    for item in body:
        if isinstance(item, list) and item[:1] == ["thread"]:
            tid = _as_int(item[1])
            threads[tid] = parse_expr(item[2], universe)
        else:
            if 0 in threads:
                raise SessionSyntaxError("multiple main expressions", 0)
            threads[0] = parse_expr(item, universe)
    if 0 not in threads:
        raise SessionSyntaxError("pool needs a main thread (id 0)", 0)
    return PoolState(universe, threads, {}, next_tid=max(threads) + 1, allow_chan2=allow_chan2)
