"""Viewtypes: the type language of the linear calculus.

A viewtype is *linear* when it can own channel resources; plain types
(bool, int, unit, products and intuitionistic arrows over them) cannot.
Channel types chan(G,S) and linear arrows/tensors are truly linear.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..roles import Group
from ..session_types import (
    BOOL,
    INT,
    STR,
    UNIT,
    BaseSort,
    ChanSort,
    SessionType,
    Sort,
    TupleSort,
)


@dataclass(frozen=True)
class Viewtype:
    pass


@dataclass(frozen=True)
class TUnit(Viewtype):
    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class TBool(Viewtype):
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class TStr(Viewtype):
    def __str__(self):
        return "str"


@dataclass(frozen=True)
class TInt(Viewtype):
    """Integers, optionally pinned to a single known value (int(i))."""

    index: int | None = None

    def __str__(self):
        return "int" if self.index is None else f"(int {self.index})"


@dataclass(frozen=True)
class TChan(Viewtype):
    group: Group
    session: SessionType

    def __str__(self):
        from ..session_types import format_session

        return f"(chan {self.group} {format_session(self.session)})"


@dataclass(frozen=True)
class TProd(Viewtype):
    """Intuitionistic product; both components are plain types."""

    fst: Viewtype
    snd: Viewtype

    def __str__(self):
        return f"(prod {self.fst} {self.snd})"


@dataclass(frozen=True)
class TTensor(Viewtype):
    """Linear pairing of possibly resource-owning components."""

    fst: Viewtype
    snd: Viewtype

    def __str__(self):
        return f"(tensor {self.fst} {self.snd})"


@dataclass(frozen=True)
class TArrow(Viewtype):
    param: Viewtype
    result: Viewtype
    linear: bool

    def __str__(self):
        return f"({'-o' if self.linear else '->'} {self.param} {self.result})"


T_UNIT = TUnit()
T_BOOL = TBool()
T_STR = TStr()
T_INT = TInt()


def is_linear(t: Viewtype) -> bool:
    """True for truly linear viewtypes (those that may own resources)."""
    match t:
        case TUnit() | TBool() | TStr() | TInt(_):
            return False
        case TChan(_, _):
            return True
        case TProd(_, _):
            return False
        case TTensor(a, b):
            return is_linear(a) or is_linear(b)
        case TArrow(_, _, linear):
            return linear
    raise TypeError(f"not a viewtype: {t!r}")


def fits(actual: Viewtype, expected: Viewtype) -> bool:
    """Can a value of type `actual` be used where `expected` is required?

    Identity except that a pinned int(i) is usable as plain int; products
    and tensors recurse, arrows and channel types are invariant.
    """
    if actual == expected:
        return True
    match (actual, expected):
        case (TInt(_), TInt(None)):
            return True
        case (TProd(a1, a2), TProd(b1, b2)) | (TTensor(a1, a2), TTensor(b1, b2)):
            return fits(a1, b1) and fits(a2, b2)
    return False


def join(t1: Viewtype, t2: Viewtype) -> Viewtype | None:
    """Least common type of two branch results, or None if incompatible."""
    if t1 == t2:
        return t1
    match (t1, t2):
        case (TInt(_), TInt(_)):
            return T_INT
        case (TProd(a1, a2), TProd(b1, b2)):
            f, s = join(a1, b1), join(a2, b2)
            return TProd(f, s) if f is not None and s is not None else None
        case (TTensor(a1, a2), TTensor(b1, b2)):
            f, s = join(a1, b1), join(a2, b2)
            return TTensor(f, s) if f is not None and s is not None else None
    return None


def sort_to_viewtype(sort: Sort) -> Viewtype:
    """The viewtype of a payload of the given sort."""
    if sort == UNIT:
        return T_UNIT
    if sort == INT:
        return T_INT
    if sort == BOOL:
        return T_BOOL
    if sort == STR:
        return T_STR
    match sort:
        case ChanSort(group, proto):
            return TChan(group, proto)
        case TupleSort(items):
            if len(items) < 2:
                raise ValueError("tuple sorts need at least two components")
            out = sort_to_viewtype(items[-1])
            for item in reversed(items[:-1]):
                left = sort_to_viewtype(item)
                if is_linear(left) or is_linear(out):
                    out = TTensor(left, out)
                else:
                    out = TProd(left, out)
            return out
    raise TypeError(f"not a payload sort: {sort!r}")
