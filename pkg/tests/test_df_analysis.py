import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from mrsession.df_analysis import (
    ChannelHalf,
    ChannelSetCollection,
    brute_force_df_reducible,
    check_trace_preservation,
    df_reduce,
    enabled_vias,
    format_collection,
    is_df_reducible,
    parse_collection,
    is_regular,
)
from mrsession.errors import IrregularInput, NotEnabled


def C(*sets):
    return ChannelSetCollection([{_half(h) for h in s} for s in sets])


def _half(text):
    return ChannelHalf(int(text[:-1]), text[-1] == "+")


class TestRegularity:
    def test_all_empty_is_regular(self):
        assert is_regular(C((), ()))

    def test_duplicate_half_across_sets(self):
        assert not is_regular(C(("1+",), ("1+",)))

    def test_unpaired_half(self):
        assert not is_regular(C(("1+",)))

    def test_intact_pair_split(self):
        assert is_regular(C(("1+",), ("1-",)))


class TestReduce:
    def test_basic_merge(self):
        out = df_reduce(C(("1+",), ("1-",)), _half("1+"))
        assert out.sets == (frozenset(),)

    def test_merge_keeps_other_halves(self):
        out = df_reduce(C(("1+", "2+"), ("1-",), ("2-",)), _half("1+"))
        assert sorted(map(len, out.sets)) == [1, 1]
        assert {h for s in out.sets for h in s} == {_half("2+"), _half("2-")}

    def test_self_loop_not_enabled(self):
        with pytest.raises(NotEnabled):
            df_reduce(C(("1+", "1-")), _half("1+"))

    def test_negative_via_not_enabled(self):
        with pytest.raises(NotEnabled):
            df_reduce(C(("1+",), ("1-",)), _half("1-"))


class TestDecision:
    def test_all_empty_reducible(self):
        assert is_df_reducible(C((), (), ()))

    def test_self_loop_not_reducible(self):
        assert not is_df_reducible(C(("1+", "1-")))

    def test_two_set_cycle_not_reducible(self):
        assert not is_df_reducible(C(("1+", "2-"), ("2+", "1-")))

    def test_empty_collection_rejected(self):
        with pytest.raises(IrregularInput):
            is_df_reducible(ChannelSetCollection([]))

    def test_irregular_rejected(self):
        with pytest.raises(IrregularInput):
            is_df_reducible(C(("1+",)))


def enumerate_regular(npairs: int, nsets: int):
    """Every placement of npairs intact pairs into nsets ordered sets."""
    halves = [f"{i}{p}" for i in range(1, npairs + 1) for p in "+-"]
    for placement in product(range(nsets), repeat=len(halves)):
        sets = [[] for _ in range(nsets)]
        for h, slot in zip(halves, placement):
            sets[slot].append(h)
        yield C(*sets)


class TestExhaustiveAgainstBruteForce:
    def test_memoized_matches_brute_force_small(self):
        memo = {}
        total = 0
        for npairs in range(0, 4):
            for nsets in range(1, 5):
                for coll in enumerate_regular(npairs, nsets):
                    assert is_df_reducible(coll, memo) == brute_force_df_reducible(coll)
                    total += 1
        assert total > 5000

    def test_saturated_collections_not_reducible(self):
        # n sets whose union holds >= n pairs can never drain
        memo = {}
        for n in range(1, 5):
            for coll in enumerate_regular(n, n):
                assert not is_df_reducible(coll, memo)


class TestClosureProperties:
    def test_dropping_empty_sets_preserves_reducibility(self):
        memo = {}
        for npairs in range(0, 3):
            for nsets in range(2, 5):
                for coll in enumerate_regular(npairs, nsets):
                    if not is_df_reducible(coll, memo):
                        continue
                    stripped = [s for s in coll.sets if s]
                    if stripped:
                        assert is_df_reducible(ChannelSetCollection(stripped), memo)

    def test_reducts_of_reducible_are_reducible_and_conversely(self):
        memo = {}
        for npairs in range(1, 4):
            for coll in enumerate_regular(npairs, 3):
                vias = enabled_vias(coll)
                if not vias:
                    continue
                reducts = [df_reduce(coll, v) for v in vias]
                if is_df_reducible(coll, memo):
                    assert all(is_df_reducible(r, memo) for r in reducts)
                elif any(is_df_reducible(r, memo) for r in reducts):
                    # prop: a single reducible reduct lifts back
                    assert is_df_reducible(coll, memo)

    def test_deleting_a_split_pair_preserves_reducibility(self):
        memo = {}
        for npairs in range(1, 4):
            for coll in enumerate_regular(npairs, 3):
                if not is_df_reducible(coll, memo):
                    continue
                for via in enabled_vias(coll):
                    dual = via.dual()
                    trimmed = ChannelSetCollection(
                        [s - {via, dual} for s in coll.sets])
                    assert is_df_reducible(trimmed, memo)


@st.composite
def relabelings(draw, npairs=3):
    perm = draw(st.permutations(list(range(1, npairs + 1))))
    flip = draw(st.booleans())
    return perm, flip


class TestCanonicalization:
    @given(st.integers(0, 5000), relabelings())
    @settings(max_examples=300)
    def test_decision_invariant_under_renaming_and_reordering(self, seed, relab):
        rng = random.Random(seed)
        npairs = rng.randrange(0, 4)
        nsets = rng.randrange(1, 5)
        halves = [ChannelHalf(i, p) for i in range(1, npairs + 1) for p in (True, False)]
        sets = [set() for _ in range(nsets)]
        for h in halves:
            sets[rng.randrange(nsets)].add(h)
        coll = ChannelSetCollection(sets)
        perm, _ = relab
        mapping = {i + 1: perm[i] for i in range(npairs)}
        renamed_sets = [
            {ChannelHalf(mapping[h.id], h.positive) for h in s} for s in sets
        ]
        rng.shuffle(renamed_sets)
        renamed = ChannelSetCollection(renamed_sets)
        memo = {}
        assert is_df_reducible(coll, memo) == is_df_reducible(renamed, memo)
        assert is_df_reducible(renamed, memo) == brute_force_df_reducible(coll)


class TestTraceChecking:
    def test_clean_trace(self):
        records = [
            {"step": 0, "rule": "init", "tids": [0], "rho_ch": [[]]},
            {"step": 1, "rule": "PR3", "tids": [0, 1], "rho_ch": [["1-"], ["1+"]]},
            {"step": 2, "rule": "PR4-close", "tids": [1, 0], "rho_ch": [[], []]},
        ]
        report = check_trace_preservation(records)
        assert report.ok and report.checked == 3

    def test_violation_reported_at_first_bad_step(self):
        records = [
            {"step": 0, "rule": "init", "tids": [0], "rho_ch": [[]]},
            {"step": 1, "rule": "PR4-send", "tids": [0, 1], "rho_ch": [[], ["2+", "2-"]]},
        ]
        report = check_trace_preservation(records)
        assert not report.ok and report.first_violation_step == 1

    def test_empty_trace_vacuously_clean(self):
        assert check_trace_preservation([]).ok


class TestLiterals:
    def test_roundtrip(self):
        coll = parse_collection("[{1+,2-},{2+,1-}]")
        assert parse_collection(format_collection(coll)) == coll
        assert format_collection(coll) == "[{1+,2-},{1-,2+}]"

    def test_empty_sets(self):
        coll = parse_collection("[{},{}]")
        assert coll.sets == (frozenset(), frozenset())

    def test_bad_half_rejected(self):
        with pytest.raises(ValueError):
            parse_collection("[{1*}]")
