import numpy as np
import pytest

from simreduce.automata import (
    NBA, NFA, is_empty_canonical, lasso_member, make_automaton, remove_dead, write_ba,
)
from simreduce.oracles import nba_lasso_falsifier, nfa_language_equiv
from simreduce.reduction import (
    PrunerSpec, ReductionReport, SaturatorSpec, heavy, heavy_sat, light, prune, quotient,
    saturate,
)
from simreduce.simulation import BW, BW_DI, DE, DI, FAIR, Relation, lookahead_preorder, solve_lookahead

from conftest import random_corpus, transition


def nba_corpus(count, base, n_range=(3, 12)):
    return random_corpus(count, base, n_range, [1.4, 1.8, 2.2, 2.6])


def nfa_corpus(count, base, n_range=(3, 10)):
    return random_corpus(count, base, n_range, [1.2, 1.6, 2.0, 2.4], NFA)


def same_language(a, b) -> bool:
    if a.semantics == NFA:
        return nfa_language_equiv(a, b)[0]
    return nba_lasso_falsifier(a, b, 4, 4) is None


@pytest.mark.parametrize("source, target, transient", [
    ("id", "strict-fair", False),
    ("strict-bw", "strict-di", False),
    ("bw", "di", False),
    ("strict-bw-sim", "strict-fair", True),
    ("id", "di", False),
])
def test_non_whitelisted_pruners_rejected(source, target, transient):
    with pytest.raises(ValueError):
        PrunerSpec(source, target, transient)


def test_transient_pruning_is_nba_only():
    PrunerSpec("id", "strict-fair", True, 2, NBA)
    with pytest.raises(ValueError):
        PrunerSpec("id", "strict-fair", True, 2, NFA)


@pytest.mark.parametrize("semantics, source, target", [
    (NBA, "di-inv", "di"),
    (NBA, "bw-di", "de"),
    (NBA, "de", "de-inv"),
    (NFA, "de-inv", "de"),
    (NFA, "bw-di", "bw-di-inv"),
    (NFA, "bw", "di"),
])
def test_non_whitelisted_saturators_rejected(semantics, source, target):
    with pytest.raises(ValueError):
        SaturatorSpec(source, target, 1, semantics)


def test_fair_quotient_rejected(delayed_prune_counterexample):
    aut = delayed_prune_counterexample
    with pytest.raises(ValueError):
        quotient(aut, lookahead_preorder(aut, 1, FAIR))


def test_backward_finite_quotient_rejected_for_nba(delayed_prune_counterexample):
    aut = delayed_prune_counterexample
    with pytest.raises(ValueError):
        quotient(aut, lookahead_preorder(aut, 1, BW))


def test_forbidden_operations_change_language(forbidden_operation_cases):
    assert len(forbidden_operation_cases) == 11
    for case in forbidden_operation_cases:
        before = lasso_member(case.automaton, case.witness)
        after = lasso_member(case.apply(case.automaton), case.witness)
        assert before != case.gains_witness, case.name
        assert after == case.gains_witness, case.name


def test_delayed_prune_removes_dashed_transition(forbidden_operation_cases,
                                                 delayed_prune_counterexample):
    aut = delayed_prune_counterexample
    out = forbidden_operation_cases[0].apply(aut)
    assert transition(aut, "p", "a", "q") not in out.transitions()
    assert is_empty(out)


def is_empty(aut) -> bool:
    return is_empty_canonical(remove_dead(aut)[0])


def test_whitelisted_direct_prune_is_sound_on_union_example(union_prune_counterexample):
    aut = union_prune_counterexample
    out = prune(aut, PrunerSpec("id", "strict-di"))
    assert transition(aut, "p", "a", "r") not in out.transitions()
    assert out.n_transitions == aut.n_transitions - 1
    assert same_language(aut, out)


def test_whitelisted_operations_keep_witnesses(forbidden_operation_cases):
    for case in forbidden_operation_cases:
        aut = case.automaton
        out = heavy(aut, 4)[0]
        w = case.witness
        assert lasso_member(out, w) == lasso_member(aut, w), case.name


def test_identity_prune_and_saturation_leave_automaton_alone():
    for aut in nba_corpus(20, 3):
        assert saturate(aut, SaturatorSpec("id", "id")).same_structure(aut)
    aut = make_automaton([("p", "a", "q"), ("q", "b", "p")], ["p"], ["q"])
    assert prune(aut, PrunerSpec("id", "strict-di")).same_structure(aut)


def test_quotient_example_classes(lookahead_quotient_example):
    aut = lookahead_quotient_example
    for cond in (DE, DI):
        out, cls = quotient(aut, lookahead_preorder(aut, 2, cond))
        groups = {}
        for s, c in zip(aut.names, cls.tolist()):
            groups.setdefault(c, set()).add(s)
        found = {frozenset(g) for g in groups.values()}
        assert frozenset({"p0", "q0", "r0"}) in found
        assert frozenset({"q2", "r2"}) in found
        assert any({"q1", "r1"} <= g for g in found)
        assert any({"q", "r"} <= g for g in found)
        assert out.n == len(found)


def test_quotient_by_identity_is_isomorphic():
    for aut in nba_corpus(10, 5):
        out, cls = quotient(aut, Relation(np.eye(aut.n, dtype=np.bool_), DI, 1, closure=True))
        assert out.same_structure(aut)
        assert cls.tolist() == list(range(aut.n))


def test_quotients_preserve_nba_language():
    for aut in nba_corpus(40, 7):
        for cond in (DE, BW_DI):
            out, _ = quotient(aut, lookahead_preorder(aut, 3, cond))
            assert same_language(aut, out)


def test_pruners_preserve_nba_language():
    specs = [PrunerSpec("id", "strict-di", k=2), PrunerSpec("strict-bw", "id", k=2),
             PrunerSpec("strict-bw-sim", "di", k=2), PrunerSpec("bw", "strict-di-sim", k=2),
             PrunerSpec("id", "strict-fair", True, k=2)]
    for aut in nba_corpus(40, 9):
        for spec in specs:
            assert same_language(aut, prune(aut, spec)), spec


def test_saturators_preserve_language():
    for aut in nba_corpus(30, 11):
        for spec in (SaturatorSpec.forward(2, NBA), SaturatorSpec.backward(2, NBA)):
            assert same_language(aut, saturate(aut, spec))
    for aut in nfa_corpus(30, 13):
        for spec in (SaturatorSpec.forward(2, NFA), SaturatorSpec.backward(2, NFA)):
            assert same_language(aut, saturate(aut, spec))


def test_saturation_only_adds():
    for aut in nba_corpus(20, 15):
        out = saturate(aut, SaturatorSpec.forward(3, NBA))
        assert set(aut.transitions()) <= set(out.transitions())


def test_worked_nfa_first_saturation(saturation_worked_nfa):
    aut = saturation_worked_nfa
    out = saturate(aut, SaturatorSpec.forward(12, NFA))
    added = set(out.transitions()) - set(aut.transitions())
    assert added == {transition(aut, "p", s, "t") for s in "ab"}


def test_worked_nfa_heavy_sat(saturation_worked_nfa):
    aut = saturation_worked_nfa
    assert aut.size_key() == (6, 11)
    assert heavy(aut, 12)[0].size_key() == (6, 11)
    out, report = heavy_sat(aut, 12)
    assert out.size_key() == (5, 10)
    assert nfa_language_equiv(aut, out)[0]
    assert report.final == (5, 10)


def test_worked_nfa_strict_rounds_stop_early(saturation_worked_nfa):
    out, _ = heavy_sat(saturation_worked_nfa, 12, aggressive=False)
    assert out.size_key() == (6, 11)


def test_heavy_on_universal_is_unchanged(universal_ab):
    out, report = heavy(universal_ab, 12)
    assert out.same_structure(universal_ab)
    assert report.initial == report.final == (1, 2)


def test_heavy_sat_on_fixpoint_without_saturation(universal_ab):
    assert heavy_sat(universal_ab, 4)[0].same_structure(universal_ab)


def test_rigid_automaton_light_unchanged():
    aut = make_automaton([("p", "a", "q"), ("q", "b", "p")], ["p"], ["q"])
    assert light(aut, 3).same_structure(aut)


@pytest.mark.parametrize("k", [2, 4])
def test_heavy_preserves_nba_language(k):
    for aut in nba_corpus(30, 17 + k):
        assert same_language(aut, heavy(aut, k)[0])
        assert same_language(aut, heavy_sat(aut, k)[0])


@pytest.mark.parametrize("k", [2, 4])
def test_heavy_preserves_nfa_language(k):
    for aut in nfa_corpus(30, 19 + k):
        assert same_language(aut, heavy(aut, k)[0])
        assert same_language(aut, heavy_sat(aut, k)[0])


def test_light_preserves_language_and_never_beats_heavy():
    for aut in nba_corpus(40, 23):
        lt = light(aut, 1)
        hv = heavy(aut, 1)[0]
        assert same_language(aut, lt)
        assert lt.n >= hv.n


def test_heavy_output_dead_free_and_idempotent():
    for aut in nba_corpus(30, 29) + nfa_corpus(20, 31):
        out = heavy(aut, 3)[0]
        assert remove_dead(out)[0].same_structure(out)
        assert len(set(out.transitions())) == out.n_transitions
        assert heavy(out, 3)[0].same_structure(out)


def test_heavy_rejects_zero_lookahead(universal_ab):
    for fn in (heavy, heavy_sat, light):
        with pytest.raises(ValueError):
            fn(universal_ab, 0)


def test_no_mediated_pairs_after_heavy_1():
    for aut in nba_corpus(40, 37):
        out = heavy(aut, 1)[0]
        both = solve_lookahead(out, 1, DI).bits & solve_lookahead(out, 1, BW_DI).bits
        np.fill_diagonal(both, False)
        assert not both.any()


def test_report_text_and_csv(delayed_prune_counterexample):
    _, report = heavy(delayed_prune_counterexample, 2)
    assert isinstance(report, ReductionReport)
    assert report.passes
    text = report.to_text()
    assert "quotient(de)" in text
    rows = report.csv_rows()
    assert len(rows) == len(report.passes) and all(len(r) == 8 for r in rows)


def test_heavy_output_is_sparser():
    dens_in, dens_out = [], []
    for aut in random_corpus(20, 41, (30, 30), [1.6, 2.0]):
        out = heavy(aut, 4)[0]
        dens_in.append(aut.n_transitions / aut.n)
        dens_out.append(out.n_transitions / out.n)
    assert np.mean(dens_out) <= np.mean(dens_in)


def test_reduced_text_is_stable():
    for aut in nba_corpus(10, 43):
        out = heavy(aut, 4)[0]
        assert write_ba(heavy(out, 4)[0]) == write_ba(out)
