import pytest
from hypothesis import given, strategies as st

from mrsession.errors import ComplementsNotDisjoint, UniverseMismatch
from mrsession.roles import (
    Group,
    RoleUniverse,
    complement,
    complements_disjoint,
    format_group,
    parse_group,
    role_block,
)


def g(universe, *members):
    return Group(universe, members)


def test_universe_needs_two_roles():
    with pytest.raises(ValueError):
        RoleUniverse(1)
    assert RoleUniverse(2).nrole == 2


def test_complement_two_role_split():
    u = RoleUniverse(2)
    assert complement(g(u, 0)).members == {1}


def test_complement_set_difference():
    u = RoleUniverse(3)
    assert complement(g(u, 0, 2)).members == {1}


def test_member_out_of_range_rejected():
    with pytest.raises(ValueError):
        g(RoleUniverse(2), 2)


def test_complements_disjoint_examples():
    u3 = RoleUniverse(3)
    assert complements_disjoint(g(u3, 1, 2), g(u3, 0, 2))
    u2 = RoleUniverse(2)
    assert not complements_disjoint(g(u2, 0), g(u2, 0))
    assert complements_disjoint(g(u2, 1), g(u2, 0))


def test_universe_mismatch_is_an_error():
    a = g(RoleUniverse(2), 0)
    b = g(RoleUniverse(3), 0)
    with pytest.raises(UniverseMismatch):
        complements_disjoint(a, b)


def test_role_block_examples():
    u3 = RoleUniverse(3)
    b = role_block(g(u3, 1, 2), g(u3, 0, 2))
    assert [x.members for x in b] == [{0}, {1}, {2}]
    u4 = RoleUniverse(4)
    b = role_block(g(u4, 1, 2, 3), g(u4, 0, 3))
    assert [x.members for x in b] == [{0}, {1, 2}, {3}]


def test_role_block_requires_disjoint_complements():
    u = RoleUniverse(2)
    with pytest.raises(ComplementsNotDisjoint):
        role_block(g(u, 0), g(u, 0))


@st.composite
def groups(draw, min_nrole=2, max_nrole=6):
    n = draw(st.integers(min_nrole, max_nrole))
    u = RoleUniverse(n)
    bits = draw(st.integers(0, (1 << n) - 1))
    return Group(u, bits)


@given(groups())
def test_complement_is_involution(grp):
    assert complement(complement(grp)) == grp


@given(groups())
def test_group_and_complement_partition_universe(grp):
    comp = complement(grp)
    assert grp.disjoint(comp)
    assert grp.union(comp).is_full()


@given(groups(), st.integers(0, 63))
def test_bitset_behavior_matches_set_arithmetic(grp, bits):
    other = Group(grp.universe, bits & ((1 << grp.universe.nrole) - 1))
    assert grp.union(other).members == grp.members | other.members
    assert grp.intersection(other).members == grp.members & other.members
    assert grp.disjoint(other) == (not (grp.members & other.members))


@given(groups(min_nrole=3))
def test_role_block_partitions_when_defined(grp):
    u = grp.universe
    full = u.full_group()
    # build a partner whose complement avoids grp's complement
    comp = complement(grp)
    if comp.is_empty() or comp.is_full():
        return
    partner = complement(Group(u, (full.bits ^ comp.bits) & full.bits))
    if not complements_disjoint(grp, partner):
        return
    blocks = role_block(grp, partner)
    seen = set()
    for b in blocks:
        assert seen.isdisjoint(b.members)
        seen |= b.members
    assert seen == set(u.roles())


@given(groups())
def test_group_literal_roundtrip(grp):
    assert parse_group(format_group(grp), grp.universe) == grp
