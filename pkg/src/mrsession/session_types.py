"""Session types and their group-relative reading.

The grammar is

    S ::= nil | msg(i,j,SORT):S | choose(i,S0,S1) | append(S0,S1) | repeat(i,S)

A message step msg(i,j) is read differently by each party depending on
the group of roles it implements: it is a send if the party holds i but
not j, a receive if it holds j but not i, and a silent internal/external
step when it holds both or neither.  All of the dynamic machinery
(interpreter, runtime monitor, link combinators) dispatches on the
`head_action` of a session relative to a group.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import IllFormedSession, SessionSyntaxError
from .roles import Group, RoleUniverse


# ---------------------------------------------------------------------------
# payload sorts

@dataclass(frozen=True)
class Sort:
    pass


@dataclass(frozen=True)
class BaseSort(Sort):
    name: str

    def __str__(self):
        return self.name


UNIT = BaseSort("unit")
INT = BaseSort("int")
BOOL = BaseSort("bool")
STR = BaseSort("str")


@dataclass(frozen=True)
class ChanSort(Sort):
    """Sort of a delegated endpoint: the receiver obtains chan(group, proto)."""

    group: Group
    proto: "SessionType"

    def __str__(self):
        return f"chan({self.group},{format_session(self.proto)})"


@dataclass(frozen=True)
class TupleSort(Sort):
    items: tuple[Sort, ...]

    def __str__(self):
        return "(" + ",".join(str(s) for s in self.items) + ")"


# ---------------------------------------------------------------------------
# session type AST

@dataclass(frozen=True)
class SessionType:
    pass


@dataclass(frozen=True)
class Nil(SessionType):
    def __str__(self):
        return "nil"


NIL = Nil()


@dataclass(frozen=True)
class Msg(SessionType):
    src: int
    dst: int
    sort: Sort
    rest: SessionType

    def __str__(self):
        return format_session(self)


@dataclass(frozen=True)
class Choose(SessionType):
    decider: int
    left: SessionType
    right: SessionType

    def __str__(self):
        return format_session(self)


@dataclass(frozen=True)
class Append(SessionType):
    first: SessionType
    second: SessionType

    def __str__(self):
        return format_session(self)


@dataclass(frozen=True)
class Repeat(SessionType):
    decider: int
    body: SessionType

    def __str__(self):
        return format_session(self)


# ---------------------------------------------------------------------------
# group-relative message interpretation

class Action(enum.Enum):
    INTERNAL = "internal"
    SEND = "send"
    RECV = "recv"
    EXTERNAL = "external"


def classify(g: Group, src: int, dst: int) -> Action:
    """The four-scenario reading of msg(src,dst) by the party holding g."""
    if src == dst:
        raise IllFormedSession(f"message from role {src} to itself")
    nrole = g.universe.nrole
    if not (0 <= src < nrole and 0 <= dst < nrole):
        raise IllFormedSession(f"roles ({src},{dst}) outside universe of {nrole}")
    if src in g:
        return Action.INTERNAL if dst in g else Action.SEND
    return Action.RECV if dst in g else Action.EXTERNAL


def well_formed(s: SessionType, universe: RoleUniverse) -> bool:
    n = universe.nrole
    match s:
        case Nil():
            return True
        case Msg(src, dst, sort, rest):
            if not (0 <= src < n and 0 <= dst < n) or src == dst:
                return False
            return _sort_well_formed(sort, universe) and well_formed(rest, universe)
        case Choose(decider, left, right):
            return 0 <= decider < n and well_formed(left, universe) and well_formed(right, universe)
        case Append(first, second):
            return well_formed(first, universe) and well_formed(second, universe)
        case Repeat(decider, body):
            return 0 <= decider < n and well_formed(body, universe)
    return False


def _sort_well_formed(sort: Sort, universe: RoleUniverse) -> bool:
    match sort:
        case BaseSort(_):
            return True
        case ChanSort(group, proto):
            if group.universe != universe or group.is_empty() or group.complement().is_empty():
                return False
            return well_formed(proto, universe)
        case TupleSort(items):
            return all(_sort_well_formed(i, universe) for i in items)
    return False


# ---------------------------------------------------------------------------
# unfolding

def unfold(s: SessionType) -> SessionType:
    """One head-normalization step.

    repeat(i,S) becomes choose(i, nil, append(S, repeat(i,S))); append is
    pushed through nil/msg/choose heads and reassociated.  Heads that are
    already nil, msg or choose come back unchanged.
    """
    match s:
        case Repeat(decider, body):
            return Choose(decider, NIL, Append(body, s))
        case Append(Nil(), second):
            return second
        case Append(Msg(src, dst, sort, rest), second):
            return Msg(src, dst, sort, Append(rest, second))
        case Append(Choose(decider, left, right), second):
            return Choose(decider, Append(left, second), Append(right, second))
        case Append(Append(a, b), second):
            return Append(a, Append(b, second))
        case Append(Repeat(_, _) as rep, second):
            return Append(unfold(rep), second)
    return s


def head_normal(s: SessionType) -> SessionType:
    """Unfold until the head constructor is nil, msg or choose."""
    while not isinstance(s, (Nil, Msg, Choose)):
        s = unfold(s)
    return s


# ---------------------------------------------------------------------------
# head actions

@dataclass(frozen=True)
class Head:
    pass


@dataclass(frozen=True)
class CloseHead(Head):
    pass


@dataclass(frozen=True)
class TransferHead(Head):
    action: Action
    src: int
    dst: int
    sort: Sort
    rest: SessionType


@dataclass(frozen=True)
class BranchHead(Head):
    decider: int
    left: SessionType
    right: SessionType
    deciding: bool


CLOSE = CloseHead()


def head_action(g: Group, s: SessionType) -> Head:
    """What the party holding g must do next on a channel at cursor s."""
    s = head_normal(s)
    match s:
        case Nil():
            return CLOSE
        case Msg(src, dst, sort, rest):
            return TransferHead(classify(g, src, dst), src, dst, sort, rest)
        case Choose(decider, left, right):
            return BranchHead(decider, left, right, deciding=decider in g)
    raise AssertionError(f"non-normal head {s!r}")


def labeled_choice(decider: int, branches: list[SessionType]) -> SessionType:
    """n-ary choice as right-nested binary choices.

    Label 0 is the leftmost branch; label k-1 is reached by k-1 right
    selections.  Used by protocols that offer more than two operations.
    """
    if not branches:
        raise ValueError("labeled_choice needs at least one branch")
    out = branches[-1]
    for b in reversed(branches[:-1]):
        out = Choose(decider, b, out)
    return out


def label_path(label: int, nbranches: int) -> list[str]:
    """The L/R selections that reach `label` in a labeled_choice tree."""
    if not 0 <= label < nbranches:
        raise ValueError(f"label {label} out of range for {nbranches} branches")
    if label == nbranches - 1:
        return ["R"] * label
    return ["R"] * label + ["L"]


# ---------------------------------------------------------------------------
# concrete syntax

def format_sort(sort: Sort) -> str:
    return str(sort)


def format_session(s: SessionType) -> str:
    match s:
        case Nil():
            return "nil"
        case Msg(src, dst, sort, rest):
            return f"msg({src},{dst},{format_sort(sort)}):{format_session(rest)}"
        case Choose(decider, left, right):
            return f"choose({decider},{format_session(left)},{format_session(right)})"
        case Append(first, second):
            return f"append({format_session(first)},{format_session(second)})"
        case Repeat(decider, body):
            return f"repeat({decider},{format_session(body)})"
    raise TypeError(f"not a session type: {s!r}")


@dataclass
class _Scanner:
    text: str
    pos: int = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise SessionSyntaxError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def word(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            raise SessionSyntaxError("expected a name or number", self.pos)
        return self.text[start:self.pos]

    def number(self) -> int:
        w = self.word()
        if not w.isdigit():
            raise SessionSyntaxError(f"expected a role index, got {w!r}", self.pos)
        return int(w)


def parse_session(text: str, universe: RoleUniverse | None = None) -> SessionType:
    """Parse the textual grammar; the inverse of format_session.

    The universe is only needed to resolve group literals inside chan
    sorts; it defaults to the three-role universe.
    """
    from .roles import DEFAULT_UNIVERSE

    sc = _Scanner(text)
    s = _parse_session(sc, universe or DEFAULT_UNIVERSE)
    sc.skip_ws()
    if sc.pos != len(text):
        raise SessionSyntaxError("trailing input", sc.pos)
    return s


def _parse_session(sc: _Scanner, universe: RoleUniverse) -> SessionType:
    w = sc.word()
    if w == "nil":
        return NIL
    if w == "msg":
        sc.expect("(")
        src = sc.number()
        sc.expect(",")
        dst = sc.number()
        sc.expect(",")
        sort = _parse_sort(sc, universe)
        sc.expect(")")
        sc.expect(":")
        return Msg(src, dst, sort, _parse_session(sc, universe))
    if w in ("choose", "append", "repeat"):
        sc.expect("(")
        if w == "append":
            first = _parse_session(sc, universe)
            sc.expect(",")
            second = _parse_session(sc, universe)
            sc.expect(")")
            return Append(first, second)
        decider = sc.number()
        sc.expect(",")
        if w == "repeat":
            body = _parse_session(sc, universe)
            sc.expect(")")
            return Repeat(decider, body)
        left = _parse_session(sc, universe)
        sc.expect(",")
        right = _parse_session(sc, universe)
        sc.expect(")")
        return Choose(decider, left, right)
    raise SessionSyntaxError(f"unknown session constructor {w!r}", sc.pos)


_BASE_SORTS = {"unit": UNIT, "int": INT, "bool": BOOL, "str": STR}


def _parse_sort(sc: _Scanner, universe: RoleUniverse) -> Sort:
    if sc.peek() == "(":
        sc.expect("(")
        items = [_parse_sort(sc, universe)]
        while sc.peek() == ",":
            sc.expect(",")
            items.append(_parse_sort(sc, universe))
        sc.expect(")")
        return TupleSort(tuple(items))
    w = sc.word()
    if w in _BASE_SORTS:
        return _BASE_SORTS[w]
    if w == "chan":
        sc.expect("(")
        sc.expect("{")
        members = []
        if sc.peek() != "}":
            members.append(sc.number())
            while sc.peek() == ",":
                sc.expect(",")
                members.append(sc.number())
        sc.expect("}")
        group = Group(universe, members)
        sc.expect(",")
        proto = _parse_session(sc, universe)
        sc.expect(")")
        return ChanSort(group, proto)
    raise SessionSyntaxError(f"unknown sort {w!r}", sc.pos)
