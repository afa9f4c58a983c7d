"""Deadlock-freedom analysis over collections of channel sets.

A snapshot of a running system assigns to every thread/agent the set of
channel halves it holds.  Such a collection can be *reduced* by picking
a positive half and its dual in two different sets and merging those
sets minus the pair; a collection is DF-reducible when every maximal
reduction path ends with all sets empty.  DF-reducible snapshots can
never correspond to a deadlocked system, and the safe channel API
preserves DF-reducibility step by step - which is exactly what
`check_trace_preservation` verifies on recorded traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from .errors import IrregularInput, NotEnabled


@dataclass(frozen=True, order=True)
class ChannelHalf:
    id: int
    positive: bool

    def dual(self) -> "ChannelHalf":
        return ChannelHalf(self.id, not self.positive)

    def __str__(self):
        return f"{self.id}{'+' if self.positive else '-'}"


def parse_half(text: str) -> ChannelHalf:
    text = text.strip()
    if len(text) < 2 or text[-1] not in "+-" or not text[:-1].isdigit():
        raise ValueError(f"bad channel half {text!r}; expected forms like 3+ or 3-")
    return ChannelHalf(int(text[:-1]), text[-1] == "+")


@dataclass(frozen=True)
class ChannelSetCollection:
    sets: tuple[frozenset[ChannelHalf], ...]

    def __init__(self, sets):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in sets))

    def __str__(self):
        return format_collection(self)

    def all_halves(self) -> list[ChannelHalf]:
        return [h for s in self.sets for h in s]


def is_regular(m: ChannelSetCollection) -> bool:
    halves = m.all_halves()
    if len(halves) != len(set(halves)):
        return False  # some half occurs in two sets (or twice)
    present = set(halves)
    return all(h.dual() in present for h in present)


def _require_regular(m: ChannelSetCollection) -> None:
    if not m.sets:
        raise IrregularInput("empty collection (no sets)")
    if not is_regular(m):
        raise IrregularInput(f"irregular collection {m}")


def enabled_vias(m: ChannelSetCollection) -> list[ChannelHalf]:
    """Positive halves whose dual lives in a different set."""
    where = {}
    for idx, s in enumerate(m.sets):
        for h in s:
            where[h] = idx
    out = []
    for h, idx in where.items():
        if h.positive and where.get(h.dual(), idx) != idx:
            out.append(h)
    return sorted(out)


def df_reduce(m: ChannelSetCollection, via: ChannelHalf) -> ChannelSetCollection:
    if not via.positive:
        raise NotEnabled(f"reduction must go via a positive half, got {via}")
    _require_regular(m)
    i1 = i2 = None
    for idx, s in enumerate(m.sets):
        if via in s:
            i1 = idx
        if via.dual() in s:
            i2 = idx
    if i1 is None or i2 is None:
        raise NotEnabled(f"{via} and its dual are not both present")
    if i1 == i2:
        raise NotEnabled(f"{via} pairs inside a single set (self-loop)")
    merged = (m.sets[i1] | m.sets[i2]) - {via, via.dual()}
    rest = [s for idx, s in enumerate(m.sets) if idx not in (i1, i2)]
    return ChannelSetCollection(rest + [merged])


# ---------------------------------------------------------------------------
# decision procedure

def _canonical_key(m: ChannelSetCollection):
    """A memo key invariant under channel renaming and set reordering.

    Nonempty sets are vertices and each channel pair is an edge from the
    set holding the positive half to the set holding the negative one;
    the key is the lexicographically smallest edge list over vertex
    relabelings.  Beyond 7 nonempty sets we fall back to a cheaper key
    that is merely stable, which only costs memo hits, not correctness.
    """
    nonempty = [s for s in m.sets if s]
    if not nonempty:
        return (0, ())
    where = {}
    for idx, s in enumerate(nonempty):
        for h in s:
            where[h] = idx
    edges = [
        (where[h], where[h.dual()])
        for h in sorted(where)
        if h.positive
    ]
    n = len(nonempty)
    if n > 7:
        return (n, tuple(sorted(tuple(sorted(map(str, s))) for s in nonempty)))
    best = None
    for perm in permutations(range(n)):
        relabeled = tuple(sorted((perm[u], perm[v]) for u, v in edges))
        if best is None or relabeled < best:
            best = relabeled
    return (n, best)


def is_df_reducible(m: ChannelSetCollection, _memo: dict | None = None) -> bool:
    """Decide DF-reducibility by exhaustive search with memoization."""
    _require_regular(m)
    memo = _memo if _memo is not None else {}
    return _decide(m, memo)


def _decide(m: ChannelSetCollection, memo: dict) -> bool:
    if all(not s for s in m.sets):
        return True
    key = _canonical_key(m)
    hit = memo.get(key)
    if hit is not None:
        return hit
    vias = enabled_vias(m)
    if not vias:
        result = False  # DF-normal but not all-empty
    else:
        result = all(_decide(df_reduce(m, via), memo) for via in vias)
    memo[key] = result
    return result


def brute_force_df_reducible(m: ChannelSetCollection) -> bool:
    """Memoization-free recursion straight off the definition; test oracle."""
    _require_regular(m)

    def go(mm: ChannelSetCollection) -> bool:
        if all(not s for s in mm.sets):
            return True
        vias = enabled_vias(mm)
        if not vias:
            return False
        return all(go(df_reduce(mm, via)) for via in vias)

    return go(m)


# ---------------------------------------------------------------------------
# snapshots and traces

def snapshot(state) -> ChannelSetCollection:
    """One channel set per thread/agent of an interpreter pool or runtime world."""
    return ChannelSetCollection(state.channel_sets())


def collection_from_rho_ch(rho_ch: list[list[str]]) -> ChannelSetCollection:
    return ChannelSetCollection([{parse_half(h) for h in group} for group in rho_ch])


@dataclass
class PreservationReport:
    checked: int
    first_violation_step: int | None

    @property
    def ok(self) -> bool:
        return self.first_violation_step is None


def check_trace_preservation(records: list[dict]) -> PreservationReport:
    """Verify that every rho_ch snapshot along a trace is DF-reducible."""
    memo: dict = {}
    checked = 0
    for rec in records:
        if "rho_ch" not in rec:
            continue
        coll = collection_from_rho_ch(rec["rho_ch"])
        if not coll.sets:
            coll = ChannelSetCollection([frozenset()])
        checked += 1
        if not is_df_reducible(coll, memo):
            return PreservationReport(checked, rec.get("step"))
    return PreservationReport(checked, None)


# ---------------------------------------------------------------------------
# collection literals:  [{1+,2-},{2+,1-}]

def format_collection(m: ChannelSetCollection) -> str:
    parts = []
    for s in m.sets:
        parts.append("{" + ",".join(str(h) for h in sorted(s)) + "}")
    return "[" + ",".join(parts) + "]"


def parse_collection(text: str) -> ChannelSetCollection:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError("collection literal must look like [{1+,2-},{2+,1-}]")
    inner = text[1:-1].strip()
    sets = []
    pos = 0
    while pos < len(inner):
        while pos < len(inner) and inner[pos] in ", \t":
            pos += 1
        if pos >= len(inner):
            break
        if inner[pos] != "{":
            raise ValueError(f"expected '{{' at position {pos} of {inner!r}")
        end = inner.find("}", pos)
        if end < 0:
            raise ValueError("unterminated set in collection literal")
        body = inner[pos + 1:end].strip()
        sets.append({parse_half(p) for p in body.split(",")} if body else set())
        pos = end + 1
    return ChannelSetCollection(sets)
