import numpy as np
import pytest

from simreduce.automata import Automaton, complete, make_automaton, trim
from simreduce.oracles import (
    bounded_counting_inclusion, classical_simulation_naive, exact_bw_di_trace_inclusion,
    exact_di_trace_inclusion,
)
from simreduce.simulation import (
    BW, BW_C, BW_DI, DE, DI, FAIR, Relation, closure_matrix, counting_backward,
    identity_relation, jumping_fair, lookahead_preorder, short_word_prefilter, solve_cross,
    solve_lookahead, strict_part, transitive_closure,
)

from conftest import random_corpus, state

FORWARD = (DI, DE, FAIR)
ALL_CONDS = (DI, DE, FAIR, BW_DI, BW, BW_C)


def small_corpus(count=40, base=11):
    return [trim(a) for a in random_corpus(count, base, (3, 10), [1.2, 1.6, 2.0, 2.5])]


@pytest.mark.parametrize("cond", FORWARD)
def test_lookahead_is_not_transitive(lookahead_non_transitive_example, cond):
    aut = lookahead_non_transitive_example
    p0, q0, r0 = (state(aut, s) for s in ("p0", "q0", "r0"))
    assert (p0, q0) not in solve_lookahead(aut, 1, cond)
    two = solve_lookahead(aut, 2, cond)
    assert (p0, q0) in two and (q0, r0) in two
    for k in range(1, 9):
        assert (p0, r0) not in solve_lookahead(aut, k, cond)


def test_naive_solver_needs_lookahead(lookahead_non_transitive_example):
    aut = lookahead_non_transitive_example
    assert (state(aut, "p0"), state(aut, "q0")) not in classical_simulation_naive(aut, DI)


@pytest.mark.parametrize("cond", ALL_CONDS)
def test_diagonal_always_present(cond):
    for aut in small_corpus(10):
        for k in (1, 3):
            assert np.all(np.diag(solve_lookahead(aut, k, cond).bits))


def test_zero_lookahead_rejected(universal_ab):
    with pytest.raises(ValueError):
        solve_lookahead(universal_ab, 0, DI)


@pytest.mark.parametrize("cond", (DI, DE, FAIR, BW_DI, BW))
def test_k1_matches_naive_solver(cond):
    for aut in random_corpus(30, 7, (4, 20), [1.5, 2.0, 2.5]):
        assert np.array_equal(solve_lookahead(aut, 1, cond).bits,
                              classical_simulation_naive(aut, cond).bits)


@pytest.mark.parametrize("cond", ALL_CONDS)
def test_monotone_in_lookahead(cond):
    for aut in small_corpus(25):
        prev = None
        for k in range(1, 7):
            cur = solve_lookahead(aut, k, cond).bits
            if prev is not None:
                assert not (prev & ~cur).any()
            prev = cur


def test_closures_inside_exact_trace_inclusions():
    for aut in small_corpus(30, 13):
        di = exact_di_trace_inclusion(aut).bits
        bw = exact_bw_di_trace_inclusion(aut).bits
        for k in (1, 2, 4, 6):
            assert not (closure_matrix(solve_lookahead(aut, k, DI).bits) & ~di).any()
            assert not (closure_matrix(solve_lookahead(aut, k, BW_DI).bits) & ~bw).any()


def test_counting_backward_inside_bounded_oracle():
    for aut in small_corpus(30, 17):
        if aut.n > 6:
            continue
        oracle = bounded_counting_inclusion(aut, 8)
        for k in (1, 2, 3):
            assert not (closure_matrix(counting_backward(aut, k).bits) & ~oracle).any()


def test_condition_chain_at_k1():
    for aut in small_corpus(30, 19):
        di = solve_lookahead(aut, 1, DI).bits
        de = solve_lookahead(aut, 1, DE).bits
        f = solve_lookahead(aut, 1, FAIR).bits
        assert not (di & ~de).any() and not (de & ~f).any()


@pytest.mark.parametrize("cond", ALL_CONDS)
def test_prefilter_does_not_change_results(cond):
    for aut in small_corpus(20, 23):
        for k in (1, 3):
            assert np.array_equal(solve_lookahead(aut, k, cond).bits,
                                  solve_lookahead(aut, k, cond, prefilter=False).bits)


@pytest.mark.parametrize("cond", (DI, FAIR, BW_DI))
def test_stuck_states_match_completed_automaton(cond):
    for aut in small_corpus(50, 29):
        full = complete(aut)
        for k in (1, 2):
            got = solve_lookahead(aut, k, cond).bits
            ref = solve_lookahead(full, k, cond).bits[:aut.n, :aut.n]
            assert np.array_equal(got, ref)


def test_stuck_spoiler_discharges_delayed_obligation():
    # a stuck Spoiler loses even with an open obligation, so only containment holds
    aut = make_automaton([("p", "a", "f"), ("q", "a", "m"), ("m", "a", "m")], ["p", "q"], ["f"])
    p, q = state(aut, "p"), state(aut, "q")
    assert (p, q) in solve_lookahead(aut, 1, DE)
    assert (p, q) not in solve_lookahead(complete(aut), 1, DE)
    for aut in small_corpus(50, 29):
        got = solve_lookahead(aut, 2, DE).bits
        ref = solve_lookahead(complete(aut), 2, DE).bits[:aut.n, :aut.n]
        assert not (ref & ~got).any()


def test_k1_relations_are_preorders():
    for aut in small_corpus(20, 31):
        for cond in (DI, DE, FAIR, BW_DI, BW):
            m = solve_lookahead(aut, 1, cond).bits
            assert np.array_equal(closure_matrix(m), m)


def test_closure_of_chain():
    m = np.zeros((3, 3), dtype=np.bool_)
    m[0, 1] = m[1, 2] = True
    c = transitive_closure(Relation(m, DI, 2))
    assert c.closure and (0, 2) in c
    assert np.array_equal(transitive_closure(c).bits, c.bits)


def test_closure_rejects_non_square():
    with pytest.raises(ValueError):
        transitive_closure(Relation(np.zeros((2, 3), dtype=np.bool_), DI, 1))


def test_strict_part_examples():
    assert strict_part(identity_relation(3)).size() == 0
    full = Relation(np.ones((2, 2), dtype=np.bool_), DI, 1, closure=True)
    assert strict_part(full).size() == 0
    chain = transitive_closure(Relation(np.array([[1, 1], [0, 1]], dtype=np.bool_), DI, 1))
    assert strict_part(chain).pairs() == [(0, 1)]


def test_strict_part_needs_closure():
    with pytest.raises(ValueError):
        strict_part(Relation(np.eye(2, dtype=np.bool_), DI, 2))


def test_cross_relation_diagonal():
    for aut in small_corpus(5, 37):
        cross = solve_cross(aut, aut, 2, FAIR)
        assert np.all(np.diag(cross.bits))


def test_cross_fair_against_universal(universal_ab):
    a = make_automaton([("x", "a", "x")], ["x"], ["x"])
    assert solve_cross(a, universal_ab, 1, FAIR).bits.all()


def test_jumping_example_beats_lookahead(jumping_left, jumping_right):
    for k in (1, 2, 4, 8):
        assert not solve_cross(jumping_left, jumping_right, k, FAIR).bits[0, 0]
    cb = counting_backward(jumping_right, 1)
    q1, r1 = state(jumping_right, "q1"), state(jumping_right, "r1")
    assert (q1, r1) in cb and (r1, q1) in cb
    assert jumping_fair(jumping_left, jumping_right, 1, transitive_closure(cb))


def test_identity_jump_is_plain_fair(jumping_left, jumping_right):
    ident = identity_relation(jumping_right.n)
    assert not jumping_fair(jumping_left, jumping_right, 2, ident)
    assert jumping_fair(jumping_right, jumping_right, 1, ident)


def test_counting_backward_without_accepting_states():
    for aut in small_corpus(15, 41):
        plain = Automaton(aut.n, aut.symbols, aut.trans.tolist(), aut.initial_states(), [],
                          aut.semantics, aut.names)
        for k in (1, 2):
            assert np.array_equal(counting_backward(plain, k).bits,
                                  solve_lookahead(plain, k, BW).bits)


def test_prefilter_marks_missing_move():
    aut = make_automaton([("p", "a", "p")], ["p"], [], states=["p", "q"])
    marked = short_word_prefilter(aut, depth=2)
    assert marked[state(aut, "p"), state(aut, "q")]
    assert not marked[state(aut, "q"), state(aut, "p")]


def test_lookahead_preorder_is_closure():
    for aut in small_corpus(10, 43):
        r = lookahead_preorder(aut, 3, DE)
        assert r.closure
        assert np.array_equal(closure_matrix(r.bits), r.bits)
