"""Staged language inclusion: reduction, simulation witnesses, short counterexamples.

Stages: (0) Light-1 reduction plus a tiny counterexample probe, (1)
inclusion-preserving simplification with simulation witnesses checked
along the way, (2) jumping simulation, (3) a bounded counterexample
search.  Anything undecided after stage 3 is reported as ``unknown``.
"""

from __future__ import annotations

import enum
import json
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

import numpy as np

from .automata import (NBA, NFA, Automaton, LassoWord, align_alphabets, disjoint_union,
                       lasso_member, product_reachable, remove_dead, restrict, word_member)
from .reduction import heavy, light
from .simulation import (BW, BW_DI, DE, DI, FAIR, Relation, WinningCondition, closure_matrix,
                         counting_backward, jumping_fair, solve_lookahead)

INCLUDED = "included"
NOT_INCLUDED = "not-included"
UNKNOWN = "unknown"

WITNESS_TRIVIAL = "reduced-to-trivial"
WITNESS_CROSS = "cross-simulation"
WITNESS_JUMPING = "jumping-simulation"


class GfiMode(enum.Enum):
    MATCH_INITIAL = "initial"
    MATCH_ACCEPTING = "accepting"


@dataclass
class InclusionOptions:
    """``k=None`` selects the lookahead from the automaton sizes."""

    k: int | None = None
    max_u: int | None = None
    max_v: int | None = None
    node_budget: int = 200_000
    time_budget: float | None = None
    semantics: str = NBA
    race: bool = False
    probe_bound: int = 2

    def __post_init__(self):
        for name in ("max_u", "max_v", "k"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.node_budget < 1 or self.probe_bound < 1:
            raise ValueError("budgets and bounds must be positive")


@dataclass
class InclusionVerdict:
    outcome: str
    stage: int
    k: int
    witness: str | None = None
    counterexample: LassoWord | tuple[str, ...] | None = None
    reason: str | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {INCLUDED: 0, NOT_INCLUDED: 1, UNKNOWN: 2}[self.outcome]

    def counterexample_text(self) -> str | None:
        if self.counterexample is None:
            return None
        if isinstance(self.counterexample, LassoWord):
            return str(self.counterexample)
        return " ".join(self.counterexample)

    def to_json(self) -> str:
        cex = self.counterexample
        if isinstance(cex, LassoWord):
            cex = {"u": list(cex.u), "v": list(cex.v)}
        elif cex is not None:
            cex = {"word": list(cex)}
        return json.dumps({
            "verdict": self.outcome,
            "stage": self.stage,
            "k": self.k,
            "witness": self.witness,
            "counterexample": cex,
            "reason": self.reason,
            "timings": {s: round(t, 6) for s, t in self.timings.items()},
        }, separators=(",", ":"))


def auto_lookahead(n: int) -> int:
    if n <= 100:
        return 12
    if n <= 1000:
        return 8
    return 4


# simulation witnesses

def cross_preorder(a: Automaton, b: Automaton, k: int, cond: WinningCondition) -> Relation:
    """A-by-B block of the closed k-lookahead relation on the disjoint union."""
    u, off = disjoint_union(a, b)
    bits = closure_matrix(solve_lookahead(u, k, cond).bits)
    return Relation(bits[:off, off:].copy(), cond, k, closure=True, offset=off)


_GFI_FORWARD = (DI, DE, FAIR)
_GFI_BACKWARD = (BW_DI, BW)


def gfi_check(a: Automaton, b: Automaton, rel: Relation, mode: GfiMode) -> bool:
    """Sufficient condition for ``L(A) <= L(B)`` from a cross relation."""
    if rel.bits.shape != (a.n, b.n):
        raise ValueError("relation must be A states by B states")
    if mode is GfiMode.MATCH_INITIAL:
        if rel.cond not in _GFI_FORWARD or (a.semantics == NFA and rel.cond is not DI):
            raise ValueError(f"{rel.cond} cannot witness inclusion by matching initial states")
        src, dst = a.initial, b.initial
    else:
        if rel.cond not in _GFI_BACKWARD or (a.semantics == NBA and rel.cond is not BW_DI):
            raise ValueError(f"{rel.cond} cannot witness inclusion by matching accepting states")
        src, dst = a.accepting, b.accepting
    return bool((rel.bits[src][:, dst].any(axis=1)).all())


def _witness(a: Automaton, b: Automaton, k: int) -> str | None:
    if not a.initial.any() or not a.accepting.any():
        return WITNESS_TRIVIAL
    fw = DI if a.semantics == NFA else FAIR
    bw = BW if a.semantics == NFA else BW_DI
    if gfi_check(a, b, cross_preorder(a, b, k, fw), GfiMode.MATCH_INITIAL):
        return WITNESS_CROSS
    if gfi_check(a, b, cross_preorder(a, b, k, bw), GfiMode.MATCH_ACCEPTING):
        return WITNESS_CROSS
    return None


# inclusion-preserving simplification

def prune_against(a: Automaton, b: Automaton, k: int) -> Automaton:
    """Drop A-transitions dominated by a B-transition: sources compared by
    backward finite-word simulation, targets by fair (NBA) or direct (NFA)."""
    fw = DI if a.semantics == NFA else FAIR
    rb = cross_preorder(a, b, k, BW).bits.astype(np.int32)
    rf_t = cross_preorder(a, b, k, fw).bits.T.astype(np.int32)
    ta = a.trans
    keep = np.ones(len(ta), dtype=np.bool_)
    for s in range(a.nsym):
        rows = np.flatnonzero(ta[:, 0] == s)
        tb = b.trans[b.trans[:, 0] == s]
        if not len(rows) or not len(tb):
            continue
        m = np.zeros((b.n, b.n), dtype=np.int32)
        m[tb[:, 1], tb[:, 2]] = 1
        cover = ((rb @ m) @ rf_t) > 0
        keep[rows] = ~cover[ta[rows, 1], ta[rows, 2]]
    if keep.all():
        return a
    return remove_dead(a.replace(transitions=[tuple(r) for r in ta[keep].tolist()]))[0]


def trim_to_product(a: Automaton, b: Automaton) -> Automaton:
    """Restrict B to the states that occur in the reachable part of A x B."""
    keep = np.zeros(b.n, dtype=np.bool_)
    for _, q in product_reachable(a, b):
        keep[q] = True
    if keep.all():
        return b
    return remove_dead(restrict(b, keep)[0])[0]


def simplify_pair(a: Automaton, b: Automaton, k: int,
                  semantics: str | None = None) -> tuple[Automaton, Automaton, str | None]:
    """Inclusion-preserving reduction of ``(A, B)``.

    Returns the simplified pair and, when a simulation already proves
    inclusion at some checkpoint, the name of the witness.
    """
    if semantics is not None:
        a, b = a.with_semantics(semantics), b.with_semantics(semantics)
    a, b = align_alphabets(a, b)
    a = heavy(a, k)[0]
    b = heavy(b, k)[0]
    a, b = align_alphabets(a, b)
    w = _witness(a, b, k)
    if w:
        return a, b, w
    for _ in range(a.n + b.n + 1):
        a2 = prune_against(a, b, k)
        b2 = trim_to_product(a2, b)
        if a2.same_structure(a) and b2.same_structure(b):
            break
        a, b = align_alphabets(heavy(a2, k)[0], heavy(b2, k)[0])
        w = _witness(a, b, k)
        if w:
            return a, b, w
    return a, b, None


# bounded counterexample search

@dataclass
class SearchBounds:
    max_u: int
    max_v: int
    node_budget: int = 200_000


class _Budget:
    def __init__(self, nodes: int, deadline: float | None, cancel: threading.Event | None):
        self.nodes = nodes
        self.deadline = deadline
        self.cancel = cancel

    def spend(self, n: int = 1) -> bool:
        self.nodes -= n
        if self.nodes < 0:
            return False
        if self.cancel is not None and self.cancel.is_set():
            return False
        return self.deadline is None or time.monotonic() < self.deadline


def _post(adj: np.ndarray, s: np.ndarray) -> np.ndarray:
    return (s.astype(np.int32) @ adj) > 0


def _star(m: np.ndarray) -> np.ndarray:
    r = m | np.eye(len(m), dtype=np.bool_)
    for j in range(len(r)):
        col = r[:, j]
        if col.any():
            r[col] |= r[j]
    return r


def _finite_counterexample(a: Automaton, b: Automaton, max_len: int, budget: _Budget):
    """Shortest word accepted by A and rejected by B, by BFS over pairs of subsets."""
    adj_a = a.adjacency().astype(np.int32)
    adj_b = b.adjacency().astype(np.int32)
    start = (a.initial.copy(), b.initial.copy())
    level = [((), start[0], start[1])]
    seen = {(start[0].tobytes(), start[1].tobytes())}
    for depth in range(max_len + 1):
        nxt = []
        for word, sa, sb in level:
            if (sa & a.accepting).any() and not (sb & b.accepting).any():
                return tuple(a.symbols[x] for x in word)
            if depth == max_len:
                continue
            for s in range(a.nsym):
                if not budget.spend():
                    return None
                ta = _post(adj_a[s], sa)
                if not ta.any():
                    continue
                tb = _post(adj_b[s], sb)
                key = (ta.tobytes(), tb.tobytes())
                if key not in seen:
                    seen.add(key)
                    nxt.append((word + (s,), ta, tb))
        level = nxt
        if not level:
            return None
    return None


class _Period:
    """Summary of a period word in both automata: one-period reachability,
    reachability through an accepting position, and derived cycle data."""

    def __init__(self, word, ra, ca, rb, cb):
        self.word = word
        self.ra, self.ca, self.rb, self.cb = ra, ca, rb, cb
        sa, sb = _star(ra), _star(rb)
        self.star_a = sa.astype(np.int32)
        self.star_b = sb.astype(np.int32)
        self.cyc_a = ((ca.astype(np.int32) @ self.star_a) > 0).diagonal()
        self.cyc_b = ((cb.astype(np.int32) @ self.star_b) > 0).diagonal()

    def key(self):
        return self.ra.tobytes() + self.ca.tobytes() + self.rb.tobytes() + self.cb.tobytes()


def _extend_block(adj, acc, r, c):
    r2 = (r.astype(np.int32) @ adj) > 0
    c2 = ((c.astype(np.int32) @ adj) > 0) | (r2 & acc[None, :])
    return r2, c2


def _lasso_counterexample(a: Automaton, b: Automaton, bounds: SearchBounds, budget: _Budget):
    """Shortest-first search for ``u v^omega`` in ``L(A) - L(B)``.

    Stems and periods are enumerated separately and deduplicated by their
    effect on both automata, which is all that membership depends on.
    """
    if not a.accepting.any():
        return None
    adj_a = a.adjacency().astype(np.int32)
    adj_b = b.adjacency().astype(np.int32)
    stems = [[((), a.initial.copy(), b.initial.copy())]]
    seen_s = {(a.initial.tobytes(), b.initial.tobytes())}
    ea, eb = np.eye(a.n, dtype=np.bool_), np.eye(b.n, dtype=np.bool_)
    za, zb = np.zeros((a.n, a.n), dtype=np.bool_), np.zeros((b.n, b.n), dtype=np.bool_)
    periods = [[]]
    frontier = [((), ea, za, eb, zb)]
    seen_p = set()

    def grow_stems():
        nxt = []
        for word, sa, sb in stems[-1]:
            for s in range(a.nsym):
                if not budget.spend():
                    return False
                ta = _post(adj_a[s], sa)
                if not ta.any():
                    continue
                tb = _post(adj_b[s], sb)
                key = (ta.tobytes(), tb.tobytes())
                if key not in seen_s:
                    seen_s.add(key)
                    nxt.append((word + (s,), ta, tb))
        stems.append(nxt)
        return True

    def grow_periods():
        nonlocal frontier
        nxt_frontier, level = [], []
        for word, ra, ca, rb, cb in frontier:
            for s in range(a.nsym):
                if not budget.spend():
                    return False
                ra2, ca2 = _extend_block(adj_a[s], a.accepting, ra, ca)
                if not ra2.any():
                    continue
                rb2, cb2 = _extend_block(adj_b[s], b.accepting, rb, cb)
                p = _Period(word + (s,), ra2, ca2, rb2, cb2)
                k = p.key()
                if k in seen_p:
                    continue
                seen_p.add(k)
                nxt_frontier.append((p.word, ra2, ca2, rb2, cb2))
                if p.cyc_a.any():
                    level.append(p)
        frontier = nxt_frontier
        periods.append(level)
        return True

    def check(lu: int, lv: int):
        group = stems[lu]
        if not group or not periods[lv]:
            return None
        ua = np.array([g[1] for g in group], dtype=np.int32)
        ub = np.array([g[2] for g in group], dtype=np.int32)
        for p in periods[lv]:
            if not budget.spend(len(group)):
                return False
            in_a = (((ua @ p.star_a) > 0) & p.cyc_a[None, :]).any(axis=1)
            if not in_a.any():
                continue
            in_b = (((ub @ p.star_b) > 0) & p.cyc_b[None, :]).any(axis=1)
            hit = np.flatnonzero(in_a & ~in_b)
            if len(hit):
                u = group[int(hit[0])][0]
                return LassoWord(tuple(a.symbols[x] for x in u), tuple(a.symbols[x] for x in p.word))
        return None

    for total in range(1, bounds.max_u + bounds.max_v + 1):
        lv_max = min(total, bounds.max_v)
        while len(periods) <= lv_max:
            if not frontier or not grow_periods():
                break
        lu_max = min(total - 1, bounds.max_u)
        while len(stems) <= lu_max:
            if not stems[-1] or not grow_stems():
                break
        for lv in range(1, lv_max + 1):
            lu = total - lv
            if lu >= len(stems) or lv >= len(periods):
                continue
            res = check(lu, lv)
            if res is False:
                return None
            if res is not None:
                return res
    return None


def bounded_counterexample(a: Automaton, b: Automaton, bounds: SearchBounds,
                           deadline: float | None = None,
                           cancel: threading.Event | None = None):
    """A word in ``L(A) - L(B)`` within the bounds, or ``None``.

    NBA: a lasso ``u v^omega`` with ``|u| <= max_u`` and ``|v| <= max_v``.
    NFA: a finite word of length at most ``max_u + max_v``.
    """
    a, b = align_alphabets(a, b.with_semantics(a.semantics))
    budget = _Budget(bounds.node_budget, deadline, cancel)
    if a.semantics == NFA:
        return _finite_counterexample(a, b, bounds.max_u + bounds.max_v, budget)
    return _lasso_counterexample(a, b, bounds, budget)


def is_counterexample(a: Automaton, b: Automaton, w) -> bool:
    a, b = align_alphabets(a, b)
    if isinstance(w, LassoWord):
        return lasso_member(a, w) and not lasso_member(b, w)
    return word_member(a, w) and not word_member(b, w)


# the pipeline

def _jump_stage(a: Automaton, b: Automaton, k: int) -> bool:
    if a.semantics == NFA:
        jump = closure_matrix(solve_lookahead(b, k, BW).bits)
    else:
        jump = closure_matrix(counting_backward(b, k).bits)
    return jumping_fair(a, b, k, Relation(jump, None, k, closure=True))


def check_inclusion(a: Automaton, b: Automaton, opts: InclusionOptions | None = None) -> InclusionVerdict:
    """Decide ``L(A) <= L(B)`` where the polynomial stages suffice.

    ``included`` and ``not-included`` verdicts are sound; counterexamples
    are re-validated by membership against the original inputs.
    """
    opts = opts or InclusionOptions()
    t_start = time.monotonic()
    deadline = None if opts.time_budget is None else t_start + opts.time_budget
    a, b = align_alphabets(a.with_semantics(opts.semantics), b.with_semantics(opts.semantics))
    orig_a, orig_b = a, b
    k = opts.k or auto_lookahead(max(a.n, b.n))
    timings: dict[str, float] = {}

    def verdict(outcome, stage, **kw):
        return InclusionVerdict(outcome, stage, k, timings=timings, **kw)

    def accept_cex(w):
        return w is not None and is_counterexample(orig_a, orig_b, w)

    def out_of_time():
        return deadline is not None and time.monotonic() >= deadline

    # stage 0
    t = time.monotonic()
    a0, b0 = align_alphabets(light(a, 1), light(b, 1))
    if not a0.accepting.any():
        timings["light"] = time.monotonic() - t
        return verdict(INCLUDED, 0, witness=WITNESS_TRIVIAL)
    pb = opts.probe_bound
    w = bounded_counterexample(a0, b0, SearchBounds(pb, pb, 5_000), deadline)
    timings["light"] = time.monotonic() - t
    if accept_cex(w):
        return verdict(NOT_INCLUDED, 0, counterexample=w)
    if out_of_time():
        return verdict(UNKNOWN, 0, reason="time budget exhausted")

    # stage 1
    t = time.monotonic()
    a1, b1, wit = simplify_pair(a0, b0, k)
    timings["simplify"] = time.monotonic() - t
    if wit:
        return verdict(INCLUDED, 1, witness=wit)
    if out_of_time():
        return verdict(UNKNOWN, 1, reason="time budget exhausted")

    bounds = SearchBounds(opts.max_u or 2 * max(a1.n, 1), opts.max_v or max(a1.n, 1),
                          opts.node_budget)

    def stage2():
        t2 = time.monotonic()
        ok = _jump_stage(a1, b1, k)
        timings["jumping"] = time.monotonic() - t2
        return verdict(INCLUDED, 2, witness=WITNESS_JUMPING) if ok else None

    def stage3(cancel=None):
        t3 = time.monotonic()
        found = bounded_counterexample(a1, b1, bounds, deadline, cancel)
        if found is not None and not accept_cex(found):
            found = None
        timings["search"] = time.monotonic() - t3
        return verdict(NOT_INCLUDED, 3, counterexample=found) if found is not None else None

    if opts.race:
        cancel = threading.Event()
        with ThreadPoolExecutor(max_workers=2) as pool:
            pending = {pool.submit(stage2), pool.submit(stage3, cancel)}
            while pending:
                done, pending = wait(pending, return_when=FIRST_COMPLETED)
                for f in done:
                    res = f.result()
                    if res is not None:
                        cancel.set()
                        return res
    else:
        res = stage2()
        if res is not None:
            return res
        if out_of_time():
            return verdict(UNKNOWN, 2, reason="time budget exhausted")
        res = stage3()
        if res is not None:
            return res
    return verdict(UNKNOWN, 3, reason="no witness and no counterexample within bounds")
