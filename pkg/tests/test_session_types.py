import random

import pytest
from hypothesis import given, strategies as st

from mrsession.errors import IllFormedSession, SessionSyntaxError
from mrsession.roles import Group, RoleUniverse
from mrsession.session_types import (
    BOOL,
    INT,
    NIL,
    STR,
    UNIT,
    Action,
    Append,
    BranchHead,
    ChanSort,
    Choose,
    CloseHead,
    Msg,
    Repeat,
    TransferHead,
    classify,
    format_session,
    head_action,
    head_normal,
    label_path,
    labeled_choice,
    parse_session,
    unfold,
    well_formed,
)

from .util import gen_session

U2, U3, U4 = RoleUniverse(2), RoleUniverse(3), RoleUniverse(4)


class TestClassify:
    def test_sender_side(self):
        assert classify(Group(U2, [0]), 0, 1) is Action.SEND

    def test_receiver_side(self):
        assert classify(Group(U2, [1]), 0, 1) is Action.RECV

    def test_internal_and_external(self):
        assert classify(Group(U3, [0, 1]), 0, 1) is Action.INTERNAL
        assert classify(Group(U3, [2]), 0, 1) is Action.EXTERNAL

    def test_self_message_rejected(self):
        with pytest.raises(IllFormedSession):
            classify(Group(U2, [0]), 1, 1)

    @given(st.integers(2, 4), st.data())
    def test_duality_swaps_send_recv_and_internal_external(self, nrole, data):
        u = RoleUniverse(nrole)
        g = Group(u, data.draw(st.integers(0, (1 << nrole) - 1)))
        src = data.draw(st.integers(0, nrole - 1))
        dst = data.draw(st.integers(0, nrole - 1).filter(lambda d: d != src))
        mine = classify(g, src, dst)
        peer = classify(g.complement(), src, dst)
        swap = {Action.SEND: Action.RECV, Action.RECV: Action.SEND,
                Action.INTERNAL: Action.EXTERNAL, Action.EXTERNAL: Action.INTERNAL}
        assert peer is swap[mine]


class TestWellFormed:
    def test_ok(self):
        assert well_formed(Msg(0, 1, INT, NIL), U2)

    def test_role_out_of_range(self):
        assert not well_formed(Msg(0, 2, INT, NIL), U2)

    def test_self_message(self):
        assert not well_formed(Msg(1, 1, INT, NIL), U2)

    def test_chan_sort_groups_checked(self):
        bad = Msg(0, 1, ChanSort(Group(U2, []), NIL), NIL)
        assert not well_formed(bad, U2)


class TestUnfold:
    def test_append_left_identity(self):
        s = Msg(0, 1, INT, NIL)
        assert unfold(Append(NIL, s)) == s

    def test_repeat_unfolds_to_choice_over_append(self):
        body = Msg(0, 1, INT, NIL)
        r = Repeat(0, body)
        assert unfold(r) == Choose(0, NIL, Append(body, r))

    def test_append_pushes_through_msg(self):
        a = Msg(0, 1, INT, NIL)
        b = Msg(1, 0, INT, NIL)
        assert unfold(Append(a, b)) == Msg(0, 1, INT, Append(NIL, b))

    def test_append_distributes_over_choose(self):
        c = Choose(0, NIL, Msg(0, 1, INT, NIL))
        b = Msg(1, 0, INT, NIL)
        out = unfold(Append(c, b))
        assert out == Choose(0, Append(NIL, b), Append(Msg(0, 1, INT, NIL), b))

    def test_append_reassociates(self):
        a, b, c = NIL, Msg(0, 1, INT, NIL), Msg(1, 0, INT, NIL)
        assert unfold(Append(Append(a, b), c)) == Append(a, Append(b, c))

    @given(st.integers(0, 10_000), st.integers(2, 4))
    def test_unfold_preserves_head_actions(self, seed, nrole):
        u = RoleUniverse(nrole)
        rng = random.Random(seed)
        s = gen_session(rng, u, 4, allow_repeat=True)
        for bits in range(1, (1 << nrole) - 1):
            g = Group(u, bits)
            assert head_action(g, s) == head_action(g, unfold(s))


def _action_stream(group, session, branch_bits, limit=64):
    """The finite action trace of a session for one party, drained via heads."""
    out = []
    s = session
    for k in range(limit):
        head = head_action(group, s)
        if isinstance(head, CloseHead):
            out.append("close")
            return out
        if isinstance(head, TransferHead):
            out.append((head.action.value, head.src, head.dst))
            s = head.rest
        else:
            take_left = bool(branch_bits >> k & 1)
            out.append(("branch", head.decider, head.deciding, take_left))
            s = head.left if take_left else head.right
    return out


class TestHeadAction:
    def test_nil_is_close(self):
        assert head_action(Group(U2, [0]), NIL) == CloseHead()

    def test_recv_head_with_continuation(self):
        s = Msg(0, 1, INT, NIL)
        head = head_action(Group(U3, [1, 2]), s)
        assert isinstance(head, TransferHead)
        assert head.action is Action.RECV
        assert head.rest == NIL

    def test_choose_send_side(self):
        s = Choose(0, Msg(0, 1, INT, NIL), NIL)
        head = head_action(Group(U2, [0]), s)
        assert isinstance(head, BranchHead) and head.deciding

    @given(st.integers(0, 10_000), st.integers(0, 2 ** 16), st.integers(2, 4))
    def test_streams_deterministic_and_closing(self, seed, branch_bits, nrole):
        u = RoleUniverse(nrole)
        rng = random.Random(seed)
        s = gen_session(rng, u, 5, allow_repeat=False)
        for bits in range(1, (1 << nrole) - 1):
            g = Group(u, bits)
            one = _action_stream(g, s, branch_bits)
            two = _action_stream(g, s, branch_bits)
            assert one == two
            assert one[-1] == "close"  # repeat-free streams terminate


class TestLabeledChoice:
    def test_three_branches_nest_right(self):
        a, b, c = NIL, Msg(1, 0, INT, NIL), Msg(0, 1, INT, NIL)
        assert labeled_choice(2, [a, b, c]) == Choose(2, a, Choose(2, b, c))

    def test_label_paths(self):
        assert label_path(0, 3) == ["L"]
        assert label_path(1, 3) == ["R", "L"]
        assert label_path(2, 3) == ["R", "R"]

    def test_paths_select_the_right_branch(self):
        branches = [Msg(0, 1, INT, NIL), Msg(1, 0, INT, NIL), NIL, Msg(0, 1, STR, NIL)]
        t = labeled_choice(0, branches)
        for label, want in enumerate(branches):
            s = t
            for step in label_path(label, len(branches)):
                assert isinstance(s, Choose)
                s = s.left if step == "L" else s.right
            assert s == want


class TestSyntax:
    def test_parse_msg(self):
        assert parse_session("msg(0,1,int):nil", U2) == Msg(0, 1, INT, NIL)

    def test_parse_choose_with_str(self):
        got = parse_session("choose(2, msg(2,0,str):nil, nil)", U3)
        assert got == Choose(2, Msg(2, 0, STR, NIL), NIL)

    def test_parse_chan_sort_and_tuple(self):
        got = parse_session("msg(0,1,chan({0},nil)):msg(1,0,(int,bool)):nil", U2)
        assert isinstance(got.sort, ChanSort)
        assert got.sort.group == Group(U2, [0])

    def test_whitespace_insensitive(self):
        a = parse_session("append( msg(0,1,unit):nil ,repeat(1, nil) )", U2)
        b = parse_session("append(msg(0,1,unit):nil,repeat(1,nil))", U2)
        assert a == b

    def test_syntax_error_carries_position(self):
        with pytest.raises(SessionSyntaxError) as exc:
            parse_session("msg(0,1,int whoops", U2)
        assert exc.value.pos >= 0

    @given(st.integers(0, 10_000), st.integers(2, 4))
    def test_format_parse_roundtrip(self, seed, nrole):
        u = RoleUniverse(nrole)
        rng = random.Random(seed)
        s = gen_session(rng, u, 5, allow_repeat=True)
        assert parse_session(format_session(s), u) == s
