"""Quotienting, pruning and saturation, and the Heavy/Light/Heavy-sat loops.

Only relation combinations known to preserve the language are accepted by
:class:`PrunerSpec`, :class:`SaturatorSpec` and :func:`quotient`.  The
``*_unchecked`` helpers apply arbitrary matrices and exist so that the
counterexample fixtures can demonstrate why the other combinations are
rejected.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from .automata import (NBA, NFA, Automaton, remove_dead, single_accepting_transform, transient_mask,
                       write_ba)
from .simulation import (BW, BW_DI, DE, DI, FAIR, Relation, WinningCondition, closure_matrix,
                         solve_lookahead)


class RelationCache:
    """Lazily computed relations of one automaton snapshot."""

    def __init__(self, aut: Automaton):
        self.aut = aut
        self._raw: dict[tuple[WinningCondition, int], np.ndarray] = {}
        self._closed: dict[tuple[WinningCondition, int], np.ndarray] = {}

    def raw(self, cond: WinningCondition, k: int) -> np.ndarray:
        key = (cond, k)
        if key not in self._raw:
            self._raw[key] = solve_lookahead(self.aut, k, cond).bits
        return self._raw[key]

    def closed(self, cond: WinningCondition, k: int) -> np.ndarray:
        key = (cond, k)
        if key not in self._closed:
            self._closed[key] = closure_matrix(self.raw(cond, k))
        return self._closed[key]

    def strict(self, cond: WinningCondition, k: int) -> np.ndarray:
        c = self.closed(cond, k)
        return c & ~c.T

    def strict_sim(self, cond: WinningCondition) -> np.ndarray:
        """Strict part of the classical (lookahead 1) simulation."""
        r = self.raw(cond, 1)
        return r & ~r.T


def backward_condition(semantics: str) -> WinningCondition:
    return BW if semantics == NFA else BW_DI


# pruning

PRUNE_SOURCES = ("id", "strict-bw-sim", "bw", "strict-bw")
PRUNE_TARGETS = ("id", "strict-di-sim", "di", "strict-di", "strict-fair")
_PRUNE_WHITELIST = {
    ("id", "strict-di", False),
    ("strict-bw", "id", False),
    ("strict-bw-sim", "di", False),
    ("bw", "strict-di-sim", False),
    ("id", "strict-fair", True),
}


@dataclass(frozen=True)
class PrunerSpec:
    """A whitelisted pair of endpoint relations for pruning.

    Source relations compare transition sources, target relations compare
    targets; ``bw`` means backward direct simulation for NBA and the
    backward finite-word simulation for NFA.  ``("id", "strict-fair", True)``
    only prunes in favour of transient transitions and is always combined
    with ``("id", "strict-di")``.
    """

    source: str
    target: str
    transient_only: bool = False
    k: int = 1
    semantics: str = NBA

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("lookahead must be positive")
        if (self.source, self.target, self.transient_only) not in _PRUNE_WHITELIST:
            raise ValueError(f"pruning with ({self.source}, {self.target}, "
                             f"transient_only={self.transient_only}) is not language preserving")
        if self.transient_only and self.semantics == NFA:
            raise ValueError("transient pruning is only available for NBA")


def _source_matrix(sel: str, cache: RelationCache, k: int, semantics: str) -> np.ndarray:
    bw = backward_condition(semantics)
    if sel == "id":
        return np.eye(cache.aut.n, dtype=np.bool_)
    if sel == "strict-bw-sim":
        return cache.strict_sim(bw)
    if sel == "bw":
        return cache.closed(bw, k)
    if sel == "strict-bw":
        return cache.strict(bw, k)
    raise ValueError(sel)


def _target_matrix(sel: str, cache: RelationCache, k: int) -> np.ndarray:
    if sel == "id":
        return np.eye(cache.aut.n, dtype=np.bool_)
    if sel == "strict-di-sim":
        return cache.strict_sim(DI)
    if sel == "di":
        return cache.closed(DI, k)
    if sel == "strict-di":
        return cache.strict(DI, k)
    if sel == "strict-fair":
        return cache.strict(FAIR, k)
    raise ValueError(sel)


def _covered(aut: Automaton, rb: np.ndarray, rf: np.ndarray, bigger: np.ndarray | None = None) -> np.ndarray:
    """Per transition row, whether some transition ``(p', a, r')`` with
    ``rb[p, p']`` and ``rf[r, r']`` exists (optionally restricted by mask ``bigger``)."""
    t = aut.trans
    out = np.zeros(len(t), dtype=np.bool_)
    if not len(t):
        return out
    rb_i = rb.astype(np.int32)
    rf_t = rf.T.astype(np.int32)
    for a in range(aut.nsym):
        rows = np.flatnonzero(t[:, 0] == a)
        if not len(rows):
            continue
        sel = rows if bigger is None else rows[bigger[rows]]
        m = np.zeros((aut.n, aut.n), dtype=np.int32)
        m[t[sel, 1], t[sel, 2]] = 1
        cover = ((rb_i @ m) @ rf_t) > 0
        out[rows] = cover[t[rows, 1], t[rows, 2]]
    return out


def _drop(aut: Automaton, remove: np.ndarray) -> Automaton:
    if not remove.any():
        return aut
    return aut.replace(transitions=[tuple(r) for r in aut.trans[~remove].tolist()])


def prune_unchecked(aut: Automaton, rb: np.ndarray, rf: np.ndarray,
                    transient_only: bool = False) -> Automaton:
    """Remove every transition dominated by another one; no language guard."""
    bigger = transient_mask(aut) if transient_only else None
    return _drop(aut, _covered(aut, rb, rf, bigger))


def prune(aut: Automaton, spec: PrunerSpec, cache: RelationCache | None = None) -> Automaton:
    """Keep exactly the transitions that no other transition dominates."""
    if cache is None or cache.aut is not aut:
        cache = RelationCache(aut)
    sem = spec.semantics
    if spec.transient_only:
        direct = _covered(aut, np.eye(aut.n, dtype=np.bool_), cache.strict(DI, spec.k))
        fair = _covered(aut, np.eye(aut.n, dtype=np.bool_), cache.strict(FAIR, spec.k),
                        transient_mask(aut))
        return _drop(aut, direct | fair)
    rb = _source_matrix(spec.source, cache, spec.k, sem)
    rf = _target_matrix(spec.target, cache, spec.k)
    return _drop(aut, _covered(aut, rb, rf))


# quotienting

def _gfq(cond: WinningCondition | None, semantics: str) -> bool:
    if cond is None:
        return True
    if semantics == NFA:
        return cond in (DI, BW, BW_DI)
    return cond in (DI, DE, BW_DI)


def quotient_unchecked(aut: Automaton, pre: np.ndarray) -> tuple[Automaton, np.ndarray]:
    """Merge the classes of ``pre & pre.T``; the least id represents a class."""
    eq = pre & pre.T
    np.fill_diagonal(eq, True)
    rep = eq.argmax(axis=1)
    reps = np.unique(rep)
    if len(reps) == aut.n:
        return aut, np.arange(aut.n)
    new_id = np.full(aut.n, -1, dtype=np.int64)
    new_id[reps] = np.arange(len(reps))
    cls = new_id[rep]
    t = aut.trans
    trans = {(a, int(cls[p]), int(cls[q])) for a, p, q in t.tolist()}
    res = Automaton(
        len(reps), aut.symbols, trans,
        sorted(set(cls[aut.initial].tolist())), sorted(set(cls[aut.accepting].tolist())),
        aut.semantics, [aut.names[r] for r in reps],
    )
    return res, cls


def quotient(aut: Automaton, pre: Relation) -> tuple[Automaton, np.ndarray]:
    """Quotient by a preorder that is good for quotienting under ``aut``'s semantics."""
    if pre.cond is not None and pre.cond not in (DI, DE, FAIR, BW, BW_DI):
        raise ValueError(f"{pre.cond} is not a simulation preorder")
    if not _gfq(pre.cond, aut.semantics):
        raise ValueError(f"quotienting by {pre.cond.value} does not preserve {aut.semantics} languages")
    if pre.bits.shape != (aut.n, aut.n):
        raise ValueError("relation does not match the automaton")
    bits = pre.bits if pre.closure else closure_matrix(pre.bits)
    return quotient_unchecked(aut, bits)


# saturation

_SAT_WHITELIST = {
    NBA: {("id", "id"), ("de-inv", "de"), ("bw-di", "bw-di-inv")},
    NFA: {("id", "id"), ("di-inv", "di"), ("bw", "bw-inv")},
}


@dataclass(frozen=True)
class SaturatorSpec:
    """Whitelisted saturation relations; ``-inv`` denotes the inverse preorder.

    A transition ``(p, a, r)`` is added when some existing ``(p', a, r')``
    has ``p`` source-related to ``p'`` and ``r`` target-related to ``r'``.
    """

    source: str
    target: str
    k: int = 1
    semantics: str = NBA

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("lookahead must be positive")
        if (self.source, self.target) not in _SAT_WHITELIST[self.semantics]:
            raise ValueError(f"saturation with ({self.source}, {self.target}) is not language "
                             f"preserving for {self.semantics}")

    @staticmethod
    def forward(k: int, semantics: str) -> "SaturatorSpec":
        if semantics == NFA:
            return SaturatorSpec("di-inv", "di", k, NFA)
        return SaturatorSpec("de-inv", "de", k, NBA)

    @staticmethod
    def backward(k: int, semantics: str) -> "SaturatorSpec":
        if semantics == NFA:
            return SaturatorSpec("bw", "bw-inv", k, NFA)
        return SaturatorSpec("bw-di", "bw-di-inv", k, NBA)


_SAT_CONDS = {"de": DE, "di": DI, "bw-di": BW_DI, "bw": BW}


def _sat_matrix(sel: str, cache: RelationCache, k: int) -> np.ndarray:
    if sel == "id":
        return np.eye(cache.aut.n, dtype=np.bool_)
    inverse = sel.endswith("-inv")
    m = cache.closed(_SAT_CONDS[sel[:-4] if inverse else sel], k)
    return m.T if inverse else m


def saturate_unchecked(aut: Automaton, rb: np.ndarray, rf: np.ndarray) -> Automaton:
    """Add ``(p, a, r)`` whenever ``(p', a, r')`` exists with ``rb[p, p']`` and ``rf[r, r']``."""
    t = aut.trans
    rb_i = rb.astype(np.int32)
    rf_t = rf.T.astype(np.int32)
    trans = set(map(tuple, t.tolist()))
    before = len(trans)
    for a in range(aut.nsym):
        rows = t[t[:, 0] == a]
        if not len(rows):
            continue
        m = np.zeros((aut.n, aut.n), dtype=np.int32)
        m[rows[:, 1], rows[:, 2]] = 1
        sat = ((rb_i @ m) @ rf_t) > 0
        trans.update((a, int(p), int(r)) for p, r in np.argwhere(sat).tolist())
    if len(trans) == before:
        return aut
    return aut.replace(transitions=trans)


def saturate(aut: Automaton, spec: SaturatorSpec, cache: RelationCache | None = None) -> Automaton:
    if spec.semantics != aut.semantics:
        raise ValueError("saturator and automaton semantics differ")
    if cache is None or cache.aut is not aut:
        cache = RelationCache(aut)
    return saturate_unchecked(aut, _sat_matrix(spec.source, cache, spec.k),
                              _sat_matrix(spec.target, cache, spec.k))


# reports

@dataclass
class PassRecord:
    operation: str
    k: int
    relation_size: int
    before: tuple[int, int]
    after: tuple[int, int]
    seconds: float


@dataclass
class ReductionReport:
    passes: list[PassRecord] = field(default_factory=list)
    initial: tuple[int, int] = (0, 0)
    final: tuple[int, int] = (0, 0)

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"input states={self.initial[0]} transitions={self.initial[1]}\n")
        for r in self.passes:
            out.write(f"{r.operation} k={r.k} rel={r.relation_size} "
                      f"{r.before[0]}/{r.before[1]} -> {r.after[0]}/{r.after[1]} "
                      f"{r.seconds * 1000:.1f}ms\n")
        out.write(f"output states={self.final[0]} transitions={self.final[1]}\n")
        return out.getvalue()

    def csv_rows(self) -> list[list]:
        return [[r.operation, r.k, r.relation_size, r.before[0], r.before[1], r.after[0],
                 r.after[1], f"{r.seconds:.6f}"] for r in self.passes]


class _Run:
    """Applies operations to a current automaton and logs them."""

    def __init__(self, aut: Automaton, report: ReductionReport):
        self.aut = aut
        self.cache = RelationCache(aut)
        self.report = report

    def apply(self, name: str, k: int, fn) -> bool:
        t0 = time.perf_counter()
        before = self.aut
        res, rel_size = fn(self.aut, self.cache)
        res = remove_dead(res)[0]
        changed = not res.same_structure(before)
        self.report.passes.append(PassRecord(name, k, rel_size, before.size_key(), res.size_key(),
                                             time.perf_counter() - t0))
        if changed:
            self.aut = res
            self.cache = RelationCache(res)
        return changed


def _prune_op(spec: PrunerSpec):
    def op(aut, cache):
        return prune(aut, spec, cache), -1
    return op


def _quotient_op(cond: WinningCondition, k: int):
    def op(aut, cache):
        m = cache.closed(cond, k)
        return quotient_unchecked(aut, m)[0], int(m.sum())
    return op


def _one_pass(run: _Run, k: int, semantics: str) -> bool:
    bw = backward_condition(semantics)
    changed = False
    steps = [
        ("prune(id,strict-di)", _prune_op(PrunerSpec("id", "strict-di", False, k, semantics))),
        ("prune(strict-bw,id)", _prune_op(PrunerSpec("strict-bw", "id", False, k, semantics))),
        ("prune(strict-bw-sim,di)", _prune_op(PrunerSpec("strict-bw-sim", "di", False, k, semantics))),
        ("prune(bw,strict-di-sim)", _prune_op(PrunerSpec("bw", "strict-di-sim", False, k, semantics))),
    ]
    if semantics == NBA:
        steps.append(("prune(R_t)", _prune_op(PrunerSpec("id", "strict-fair", True, k, semantics))))
        steps.append(("quotient(de)", _quotient_op(DE, k)))
    else:
        steps.append(("quotient(di)", _quotient_op(DI, k)))
    steps.append((f"quotient({bw.value})", _quotient_op(bw, k)))
    for name, op in steps:
        changed |= run.apply(name, k, op)
    return changed


def _prepare(aut: Automaton, semantics: str | None) -> Automaton:
    if semantics is not None:
        aut = aut.with_semantics(semantics)
    aut = remove_dead(aut)[0]
    if aut.semantics == NFA:
        aut = remove_dead(single_accepting_transform(aut))[0]
    return aut


def _heavy_loop(run: _Run, k: int, semantics: str):
    while True:
        while _one_pass(run, 1, semantics):
            pass
        if k == 1 or not _one_pass(run, k, semantics):
            return


def heavy(aut: Automaton, k: int, semantics: str | None = None) -> tuple[Automaton, ReductionReport]:
    """Heavy-k: dead-state removal, whitelisted pruning and quotienting to a fixpoint.

    Inner passes use lookahead 1 until nothing changes; then a pass with
    lookahead ``k`` runs, and the whole loop repeats while it changes the
    automaton.  Relations are recomputed after every modification.
    """
    if k < 1:
        raise ValueError("lookahead must be positive")
    report = ReductionReport(initial=aut.size_key())
    run = _Run(_prepare(aut, semantics), report)
    _heavy_loop(run, k, run.aut.semantics)
    report.final = run.aut.size_key()
    return run.aut, report


def light(aut: Automaton, k: int, semantics: str | None = None) -> Automaton:
    """Light-k: remove dead states, then quotient once by delayed (NBA) or direct (NFA) simulation."""
    if k < 1:
        raise ValueError("lookahead must be positive")
    if semantics is not None:
        aut = aut.with_semantics(semantics)
    aut = remove_dead(aut)[0]
    cond = DI if aut.semantics == NFA else DE
    rel = solve_lookahead(aut, k, cond)
    return remove_dead(quotient_unchecked(aut, closure_matrix(rel.bits))[0])[0]


def heavy_sat(aut: Automaton, k: int, semantics: str | None = None,
              aggressive: bool = True, max_rounds: int = 1000) -> tuple[Automaton, ReductionReport]:
    """Heavy-k interleaved with forward and backward saturation.

    Each round saturates forwards, quotients by the backward preorder,
    saturates backwards and reduces again.  The reduction after saturation
    starts with the two mixed prunes so that saturated transitions can
    displace the ones they dominate before ``(id, strict-di)`` pruning would
    remove them again.  With ``aggressive`` (the default) rounds continue until an automaton
    repeats; otherwise they stop at the first round that is not strictly
    smaller in (states, transitions) order.  The smallest automaton seen
    is returned.
    """
    if k < 1:
        raise ValueError("lookahead must be positive")
    report = ReductionReport(initial=aut.size_key())
    run = _Run(_prepare(aut, semantics), report)
    sem = run.aut.semantics
    _heavy_loop(run, k, sem)
    bw = backward_condition(sem)
    best = run.aut
    seen = {write_ba(run.aut)}
    for _ in range(max_rounds):
        before = run.aut
        run.apply("saturate(fw)", k,
                  lambda a, c: (saturate(a, SaturatorSpec.forward(k, sem), c), -1))
        run.apply(f"quotient({bw.value})", k, _quotient_op(bw, k))
        run.apply("saturate(bw)", k,
                  lambda a, c: (saturate(a, SaturatorSpec.backward(k, sem), c), -1))
        run.apply("prune(strict-bw-sim,di)", k,
                  _prune_op(PrunerSpec("strict-bw-sim", "di", False, k, sem)))
        run.apply("prune(bw,strict-di-sim)", k,
                  _prune_op(PrunerSpec("bw", "strict-di-sim", False, k, sem)))
        _heavy_loop(run, k, sem)
        if run.aut.size_key() < best.size_key():
            best = run.aut
        if aggressive:
            key = write_ba(run.aut)
            if key in seen:
                break
            seen.add(key)
        elif run.aut.size_key() >= before.size_key():
            break
    report.final = best.size_key()
    return best, report
