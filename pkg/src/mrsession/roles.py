"""Role universes and groups of roles.

A universe fixes the number of roles (at least two); a group is a subset
of those roles held by one party of a channel.  Groups are stored as
bitmasks so the set algebra underneath channel typing is O(1), but the
observable behavior is ordinary finite-set arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ComplementsNotDisjoint, UniverseMismatch


@dataclass(frozen=True)
class RoleUniverse:
    nrole: int

    def __post_init__(self):
        if self.nrole < 2:
            raise ValueError(f"need at least 2 roles, got {self.nrole}")

    def roles(self) -> range:
        return range(self.nrole)

    def full_group(self) -> "Group":
        return Group(self, self.roles())

    def group(self, *members: int) -> "Group":
        return Group(self, members)


DEFAULT_UNIVERSE = RoleUniverse(3)


@dataclass(frozen=True)
class Group:
    universe: RoleUniverse
    bits: int

    def __init__(self, universe: RoleUniverse, members: Iterable[int] | int):
        object.__setattr__(self, "universe", universe)
        if isinstance(members, int):
            bits = members
        else:
            bits = 0
            for m in members:
                if not 0 <= m < universe.nrole:
                    raise ValueError(f"role {m} outside universe of {universe.nrole} roles")
                bits |= 1 << m
        if bits >> universe.nrole:
            raise ValueError("group bits exceed universe")
        object.__setattr__(self, "bits", bits)

    @property
    def members(self) -> frozenset[int]:
        return frozenset(i for i in self.universe.roles() if self.bits >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return (i for i in self.universe.roles() if self.bits >> i & 1)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __contains__(self, role: int) -> bool:
        return 0 <= role < self.universe.nrole and bool(self.bits >> role & 1)

    def __str__(self) -> str:
        return format_group(self)

    def _check(self, other: "Group") -> None:
        if self.universe != other.universe:
            raise UniverseMismatch(f"{self} and {other} live in different universes")

    def complement(self) -> "Group":
        mask = (1 << self.universe.nrole) - 1
        return Group(self.universe, mask & ~self.bits)

    def union(self, other: "Group") -> "Group":
        self._check(other)
        return Group(self.universe, self.bits | other.bits)

    def intersection(self, other: "Group") -> "Group":
        self._check(other)
        return Group(self.universe, self.bits & other.bits)

    def disjoint(self, other: "Group") -> bool:
        self._check(other)
        return self.bits & other.bits == 0

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == (1 << self.universe.nrole) - 1


def complement(g: Group) -> Group:
    return g.complement()


def complements_disjoint(g0: Group, g1: Group) -> bool:
    return g0.complement().disjoint(g1.complement())


def role_block(g0: Group, g1: Group) -> tuple[Group, Group, Group]:
    """Split the universe into (complement(g0), complement(g1), g0 & g1).

    The three blocks partition the universe; this is only defined when the
    two complements are disjoint, which is the precondition for three-way
    channel linking.
    """
    if not complements_disjoint(g0, g1):
        raise ComplementsNotDisjoint(f"complements of {g0} and {g1} overlap")
    return g0.complement(), g1.complement(), g0.intersection(g1)


def format_group(g: Group) -> str:
    return "{" + ",".join(str(i) for i in sorted(g.members)) + "}"


def parse_group(text: str, universe: RoleUniverse) -> Group:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ValueError(f"group literal must look like {{0,2}}, got {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return Group(universe, ())
    return Group(universe, (int(part) for part in inner.split(",")))
