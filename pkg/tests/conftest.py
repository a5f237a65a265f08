from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
import pytest

from simreduce.automata import NBA, NFA, Automaton, LassoWord, make_automaton
from simreduce.generators import TVParams, derive_seed, tabakov_vardi
from simreduce.oracles import exact_bw_di_trace_inclusion, exact_di_trace_inclusion
from simreduce.reduction import prune_unchecked, saturate_unchecked
from simreduce.simulation import BW_DI, DE, DI, FAIR, closure_matrix, solve_lookahead


def loops(state, symbols):
    return [(state, s, state) for s in symbols]


def fan(src, symbols, dst):
    return [(src, s, dst) for s in symbols]


def random_corpus(count: int, base: int, n_range, tds, semantics=NBA, sigma=2, ad="0.5"):
    """Deterministic Tabakov-Vardi corpus cycling through sizes and densities."""
    out = []
    lo, hi = n_range
    for i in range(count):
        n = lo + i % (hi - lo + 1)
        td = Fraction(str(tds[i % len(tds)]))
        p = TVParams(n, sigma, td, Fraction(ad), derive_seed(base, i))
        out.append(tabakov_vardi(p, semantics))
    return out


def state(aut: Automaton, name: str) -> int:
    return aut.names.index(name)


def transition(aut: Automaton, src: str, sym: str, dst: str) -> tuple[int, int, int]:
    return (state(aut, src), aut.symbol_id(sym), state(aut, dst))


def strict(m: np.ndarray) -> np.ndarray:
    return m & ~m.T


def closed(aut: Automaton, cond, k: int = 1) -> np.ndarray:
    return closure_matrix(solve_lookahead(aut, k, cond).bits)


def identity(aut: Automaton) -> np.ndarray:
    return np.eye(aut.n, dtype=np.bool_)


def explicit_preorder(aut: Automaton, pairs) -> np.ndarray:
    m = identity(aut)
    for p, q in pairs:
        m[state(aut, p), state(aut, q)] = True
    return closure_matrix(m)


def with_transitions(aut: Automaton, transitions) -> Automaton:
    trans = [(a, p, q) for p, a, q in transitions]
    return Automaton(aut.n, aut.symbols, trans, aut.initial_states(), aut.accepting_states(),
                     aut.semantics, aut.names)


@dataclass
class ForbiddenOperation:
    """An automaton, a non-whitelisted operation and a word whose membership it flips."""

    name: str
    automaton: Automaton
    apply: Callable[[Automaton], Automaton]
    witness: LassoWord
    gains_witness: bool  # saturation adds the word, pruning loses it


A_OMEGA = LassoWord((), ("a",))


@pytest.fixture
def delayed_prune_counterexample() -> Automaton:
    t = [("p", "a", "q")] + loops("p", "ab") + loops("q", "a")
    return make_automaton(t, ["p"], ["q"])


@pytest.fixture
def union_prune_counterexample() -> Automaton:
    t = [("p", "a", "q"), ("q", "a", "s"), ("q", "b", "s"), ("p", "a", "r"), ("p", "b", "r"),
         ("r", "a", "s"), ("s", "c", "s")]
    return make_automaton(t, ["p"], ["s"])


@pytest.fixture
def double_trace_inclusion_counterexample() -> Automaton:
    t = [("i", "a", "p0"), ("i", "c", "x0"), ("i", "b", "r0"), ("p0", "a", "q0"),
         ("q0", "a", "r0"), ("r0", "a", "s0"), ("s0", "a", "f"), ("s0", "d", "f"),
         ("x0", "a", "y0"), ("y0", "a", "r0"),
         ("i", "a", "p1"), ("i", "c", "p1"), ("p1", "a", "q1"), ("q1", "a", "x1"),
         ("q1", "b", "f"), ("q1", "a", "r1"), ("r1", "a", "s1"), ("s1", "a", "f"),
         ("x1", "a", "y1"), ("y1", "d", "f"), ("f", "e", "f")]
    return make_automaton(t, ["i"], ["f"])


@pytest.fixture
def strict_inclusion_simulation_counterexample() -> Automaton:
    t = fan("p0", "bc", "q2") + [("q2", "a", "r0"), ("p0", "a", "q0"), ("q0", "a", "r0"),
                                 ("r0", "a", "s0"), ("s0", "a", "f")]
    t += fan("p0", "ab", "q1") + [("q1", "a", "r1"), ("r1", "a", "s1"), ("s1", "a", "f")]
    t += loops("f", "a")
    return make_automaton(t, ["p0"], ["f"])


@pytest.fixture
def transient_prune_counterexample() -> Automaton:
    t = [("p", "a", "q"), ("q", "a", "r"), ("q", "b", "r")] + loops("p", "ab") + loops("r", "a")
    return make_automaton(t, ["p", "q"], ["r"])


@pytest.fixture
def delayed_inclusion_saturation_counterexample() -> Automaton:
    t = [("p", "a", "q"), ("q", "a", "q"), ("q", "a", "r"), ("r", "a", "s"), ("s", "a", "s")]
    return make_automaton(t, ["p"], ["p", "r"])


@pytest.fixture
def inverse_delayed_inclusion_saturation_counterexample() -> Automaton:
    t = [("q", "a", "q"), ("q", "a", "r"), ("r", "a", "s"), ("s", "a", "s"), ("s", "a", "t"),
         ("t", "a", "u"), ("u", "a", "u")]
    return make_automaton(t, ["q"], ["r", "t"])


@pytest.fixture
def fair_saturation_counterexample() -> Automaton:
    t = [("p", "a", "p"), ("p", "a", "q"), ("q", "a", "r"), ("r", "a", "r")]
    return make_automaton(t, ["p"], ["q"])


@pytest.fixture
def backward_forward_saturation_counterexample() -> Automaton:
    t = [("p", "a", "q")] + loops("q", "bc") + loops("p", "bc") + loops("r", "c")
    return make_automaton(t, ["p", "r"], ["p", "q", "r"])


@pytest.fixture
def forward_backward_saturation_counterexample() -> Automaton:
    t = [("p", "a", "p"), ("q", "a", "q"), ("r", "a", "s")]
    return make_automaton(t, ["p"], ["q"], states=["p", "q", "r", "s"])


def _union_prune(aut: Automaton) -> Automaton:
    by_sim = prune_unchecked(aut, identity(aut), strict(closed(aut, DI)))
    by_bw = prune_unchecked(aut, strict(closed(aut, BW_DI)), identity(aut))
    return with_transitions(aut, set(by_sim.transitions()) & set(by_bw.transitions()))


@pytest.fixture
def forbidden_operation_cases(
    delayed_prune_counterexample,
    union_prune_counterexample,
    double_trace_inclusion_counterexample,
    strict_inclusion_simulation_counterexample,
    transient_prune_counterexample,
    delayed_inclusion_saturation_counterexample,
    inverse_delayed_inclusion_saturation_counterexample,
    fair_saturation_counterexample,
    backward_forward_saturation_counterexample,
    forward_backward_saturation_counterexample,
) -> list[ForbiddenOperation]:
    big = double_trace_inclusion_counterexample.n
    sat_de = delayed_inclusion_saturation_counterexample
    sat_de_inv = inverse_delayed_inclusion_saturation_counterexample
    return [
        ForbiddenOperation(
            "prune by identity and strict delayed simulation",
            delayed_prune_counterexample,
            lambda a: prune_unchecked(a, identity(a), strict(closed(a, DE))),
            A_OMEGA, False),
        ForbiddenOperation(
            "union of two individually sound prunings",
            union_prune_counterexample, _union_prune,
            LassoWord(("a", "a"), ("c",)), False),
        ForbiddenOperation(
            "prune by strict backward and strict forward trace inclusion",
            double_trace_inclusion_counterexample,
            lambda a: prune_unchecked(a, strict(exact_bw_di_trace_inclusion(a, big).bits),
                                      strict(exact_di_trace_inclusion(a, big).bits)),
            LassoWord(("a",) * 5, ("e",)), False),
        ForbiddenOperation(
            "prune by strict backward trace inclusion and direct simulation",
            strict_inclusion_simulation_counterexample,
            lambda a: prune_unchecked(a, strict(exact_bw_di_trace_inclusion(a).bits),
                                      closed(a, DI)),
            A_OMEGA, False),
        ForbiddenOperation(
            "transient prune with a strict backward source",
            transient_prune_counterexample,
            lambda a: prune_unchecked(a, strict(closed(a, BW_DI)), strict(closed(a, DE)),
                                      transient_only=True),
            A_OMEGA, False),
        ForbiddenOperation(
            "saturate by identity and delayed trace inclusion",
            sat_de,
            lambda a: saturate_unchecked(a, identity(a), explicit_preorder(a, [("p", "q")])),
            A_OMEGA, True),
        ForbiddenOperation(
            "saturate by inverse delayed trace inclusion and identity",
            sat_de_inv,
            lambda a: saturate_unchecked(a, explicit_preorder(a, [("q", "r")]).T, identity(a)),
            A_OMEGA, True),
        ForbiddenOperation(
            "saturate by identity and fair simulation",
            fair_saturation_counterexample,
            lambda a: saturate_unchecked(a, identity(a), closed(a, FAIR)),
            A_OMEGA, True),
        ForbiddenOperation(
            "saturate by inverse fair simulation and identity",
            fair_saturation_counterexample,
            lambda a: saturate_unchecked(a, closed(a, FAIR).T, identity(a)),
            A_OMEGA, True),
        ForbiddenOperation(
            "saturate by backward direct and direct simulation",
            backward_forward_saturation_counterexample,
            lambda a: saturate_unchecked(a, closed(a, BW_DI), closed(a, DI)),
            A_OMEGA, True),
        ForbiddenOperation(
            "saturate by inverse direct and inverse backward direct simulation",
            forward_backward_saturation_counterexample,
            lambda a: saturate_unchecked(a, closed(a, DI).T, closed(a, BW_DI).T),
            A_OMEGA, True),
    ]


@pytest.fixture
def lookahead_non_transitive_example() -> Automaton:
    t = loops("p0", "ab")
    t += [("q0", s, d) for s in "ab" for d in ("q1", "q2")] + [("q1", "a", "q0"), ("q2", "b", "q0")]
    t += [("r0", s, d) for s in "ab" for d in ("r1", "r2")]
    t += [("r1", "a", "r1"), ("r1", "a", "r2"), ("r2", "b", "r2"), ("r2", "b", "r1")]
    return make_automaton(t, ["p0"], [], states=["p0", "q0", "q1", "q2", "r0", "r1", "r2"])


@pytest.fixture
def lookahead_quotient_example(lookahead_non_transitive_example) -> Automaton:
    base = lookahead_non_transitive_example
    extra = [("q", "a", "q0"), ("q", "a", "r0"), ("r", "a", "r0")]
    t = [(base.names[p], base.symbols[a], base.names[q]) for p, a, q in base.transitions()]
    return make_automaton(t + extra, ["p0", "q", "r"], [], states=base.names + ("q", "r"))


@pytest.fixture
def jumping_left() -> Automaton:
    t = [("p0", "a", "q0"), ("p0", "a", "r0"), ("q0", "b", "s0"), ("r0", "c", "t0"),
         ("p0", "a", "p0"), ("s0", "b", "s0"), ("t0", "c", "t0")]
    return make_automaton(t, ["p0"], ["s0", "t0"])


@pytest.fixture
def jumping_right() -> Automaton:
    t = [("p1", "a", "q1"), ("p1", "a", "r1"), ("q1", "b", "s1"), ("r1", "c", "t1"),
         ("q1", "a", "q1"), ("r1", "a", "r1"), ("s1", "b", "s1"), ("t1", "c", "t1")]
    return make_automaton(t, ["p1"], ["s1", "t1"])


@pytest.fixture
def saturation_worked_nfa() -> Automaton:
    t = [("p", "a", "q"), ("p", "b", "r"), ("p", "c", "s"), ("p", "d", "t")]
    t += fan("q", "ac", "u") + fan("r", "ab", "u") + fan("s", "bc", "u") + [("t", "a", "u")]
    return make_automaton(t, ["p"], ["p", "u"], NFA)


SAMPLE_BA_TEXT = "[1]\na,[1]->[2]\nb,[2]->[1]\nc,[1]->[3]\n[2]\n[3]\n"


@pytest.fixture
def sample_ba_text() -> str:
    return SAMPLE_BA_TEXT


@pytest.fixture
def universal_ab() -> Automaton:
    return make_automaton(loops("u", "ab"), ["u"], ["u"])


ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        terminalreporter.write_line(ACCEPTANCE[key])
