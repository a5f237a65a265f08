"""Independent reference procedures used to cross-check the fast engine.

Everything here is deliberately written in plain Python over explicit game
graphs or subset constructions and shares no code with the lookahead
kernels.  The exact procedures refuse inputs above a size bound instead of
truncating silently.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from .automata import Automaton, LassoWord, align_alphabets
from .simulation import BW, BW_DI, DE, DI, FAIR, Relation, WinningCondition

ORACLE_BOUND = 12


class OracleRefused(RuntimeError):
    """The input exceeds the configured size or state budget of an oracle."""


# parity games

def _attractor(player, target, vertices, owner, succ, pred):
    """Vertices of ``vertices`` from which ``player`` can force a visit to ``target``."""
    attr = set(target)
    count = {}
    queue = deque(attr)
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u not in vertices or u in attr:
                continue
            if owner[u] == player:
                attr.add(u)
                queue.append(u)
            else:
                if u not in count:
                    count[u] = sum(1 for w in succ[u] if w in vertices)
                count[u] -= 1
                if count[u] == 0:
                    attr.add(u)
                    queue.append(u)
    return attr


def _zielonka(vertices, owner, prio, succ, pred):
    """Winning regions ``(W0, W1)`` of a max-parity game; player 0 wins even priorities."""
    if not vertices:
        return set(), set()
    top = max(prio[v] for v in vertices)
    player = top % 2
    opp = 1 - player
    a = _attractor(player, {v for v in vertices if prio[v] == top}, vertices, owner, succ, pred)
    sub = _zielonka(vertices - a, owner, prio, succ, pred)
    if not sub[opp]:
        win = [set(), set()]
        win[player] = set(vertices)
        return tuple(win)
    b = _attractor(opp, sub[opp], vertices, owner, succ, pred)
    sub2 = _zielonka(vertices - b, owner, prio, succ, pred)
    win = [set(), set()]
    win[player] = sub2[player]
    win[opp] = sub2[opp] | b
    return tuple(win)


def solve_parity(owner, prio, succ):
    """Solve a max-parity game given as dicts; dead ends lose for their owner."""
    owner = dict(owner)
    prio = dict(prio)
    succ = {v: list(s) for v, s in succ.items()}
    sinks = {0: ("sink", 0), 1: ("sink", 1)}
    # sink won by player i: self-loop with a priority of parity i
    for i, s in sinks.items():
        owner[s] = i
        prio[s] = 2 if i == 0 else 1
        succ[s] = [s]
    for v in list(succ):
        if not succ[v]:
            succ[v] = [sinks[1 - owner[v]]]
    pred = {v: [] for v in succ}
    for v, ss in succ.items():
        for w in ss:
            pred[w].append(v)
    return _zielonka(set(succ), owner, prio, succ, pred)


def classical_simulation_naive(aut: Automaton, cond: WinningCondition) -> Relation:
    """Textbook one-step simulation game solved on an explicit game graph.

    Spoiler positions are ``("S", p, q, b)`` and Duplicator positions
    ``("D", p2, a, q, b)`` after Spoiler moved to ``p2`` reading ``a``.  The
    bit ``b`` is the pending obligation of delayed simulation.  Direct-style
    conditions send violating positions to a Spoiler-won sink.  A player who
    cannot move loses.
    """
    if cond not in (DI, DE, FAIR, BW_DI, BW):
        raise ValueError(f"no naive solver for {cond}")
    n, F, I = aut.n, aut.accepting, aut.initial
    backward = cond in (BW_DI, BW)
    step = aut.pred if backward else aut.succ

    def violates(p, q):
        if cond in (DI, BW_DI) and F[p] and not F[q]:
            return True
        if cond in (BW_DI, BW) and I[p] and not I[q]:
            return True
        return False

    def start_bit(p, q):
        return 0 if (cond is not DE or F[q]) else int(F[p])

    def next_bit(b, p2, q2):
        if cond is not DE:
            return 0
        if F[q2]:
            return 0
        return 1 if (F[p2] or b) else 0

    owner, prio, succ = {}, {}, {}
    lose = ("lose",)  # reached after a violation: Spoiler wins
    owner[lose], prio[lose], succ[lose] = 1, 1, [lose]
    starts = {}
    todo = []
    for p in range(n):
        for q in range(n):
            v = ("S", p, q, start_bit(p, q))
            starts[p, q] = v
            todo.append(v)
    seen = set(todo)
    while todo:
        v = todo.pop()
        if v[0] == "S":
            _, p, q, b = v
            owner[v] = 1
            if cond is DE:
                prio[v] = 1 if b else 2
            elif cond is FAIR:
                prio[v] = 2 if F[q] else (1 if F[p] else 0)
            else:
                prio[v] = 0
            if violates(p, q):
                succ[v] = [lose]
                continue
            out = []
            for a in range(aut.nsym):
                for p2 in step(p, a).tolist():
                    out.append(("D", p2, a, q, b))
        else:
            _, p2, a, q, b = v
            owner[v], prio[v] = 0, 0
            out = [("S", p2, q2, next_bit(b, p2, q2)) for q2 in step(q, a).tolist()]
        succ[v] = out
        for w in out:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    win0, _ = solve_parity(owner, prio, succ)
    bits = np.zeros((n, n), dtype=np.bool_)
    for (p, q), v in starts.items():
        bits[p, q] = v in win0
    return Relation(bits, cond, 1)


# exact trace inclusions on small automata

def _masks(aut: Automaton, backward: bool):
    step = aut.pred if backward else aut.succ
    return [[sum(1 << r for r in step(q, a).tolist()) for a in range(aut.nsym)]
            for q in range(aut.n)]


def _image(masks, s, a):
    out = 0
    while s:
        low = s & -s
        out |= masks[low.bit_length() - 1][a]
        s ^= low
    return out


def _bad_vertices(starts, edges_of, is_bad):
    """Vertices reachable from ``starts`` that can reach a bad vertex."""
    seen = set(starts)
    stack = list(starts)
    rev = {}
    bad = []
    while stack:
        v = stack.pop()
        if is_bad(v):
            bad.append(v)
        for w in edges_of(v):
            rev.setdefault(w, []).append(v)
            if w not in seen:
                seen.add(w)
                stack.append(w)
    losing = set(bad)
    stack = list(bad)
    while stack:
        v = stack.pop()
        for u in rev.get(v, ()):
            if u not in losing:
                losing.add(u)
                stack.append(u)
    return losing


def _check_bound(aut: Automaton, bound: int):
    if aut.n > bound:
        raise OracleRefused(f"{aut.n} states exceed the oracle bound {bound}")


def exact_di_trace_inclusion(aut: Automaton, bound: int = ORACLE_BOUND) -> Relation:
    """Direct trace inclusion via the pebble-set safety game on ``Q x 2^Q``.

    Duplicator's pebble set follows Spoiler's letters and is restricted to
    accepting states whenever Spoiler is accepting; Duplicator loses iff the
    set becomes empty.
    """
    _check_bound(aut, bound)
    masks = _masks(aut, False)
    fmask = sum(1 << q for q in aut.accepting_states())
    full = (1 << aut.n) - 1

    def filt(p, s):
        return s & fmask if aut.accepting[p] else s

    def edges(v):
        p, s = v
        for a in range(aut.nsym):
            img = _image(masks, s, a)
            for p2 in aut.succ(p, a).tolist():
                yield (p2, filt(p2, img) & full)

    starts = {(p, q): (p, filt(p, 1 << q)) for p in range(aut.n) for q in range(aut.n)}
    losing = _bad_vertices(set(starts.values()), edges, lambda v: v[1] == 0)
    bits = np.zeros((aut.n, aut.n), dtype=np.bool_)
    for (p, q), v in starts.items():
        bits[p, q] = v not in losing
    return Relation(bits, DI, 0, closure=True)


def exact_bw_di_trace_inclusion(aut: Automaton, bound: int = ORACLE_BOUND) -> Relation:
    """Backward direct trace inclusion by reachability in the backward subset graph.

    ``p`` is not included in ``q`` iff from ``(p, {q})`` a vertex is reachable
    whose first component is initial while the set contains no initial state.
    """
    _check_bound(aut, bound)
    masks = _masks(aut, True)
    fmask = sum(1 << q for q in aut.accepting_states())
    imask = sum(1 << q for q in aut.initial_states())

    def filt(p, s):
        return s & fmask if aut.accepting[p] else s

    def edges(v):
        p, s = v
        for a in range(aut.nsym):
            img = _image(masks, s, a)
            for p2 in aut.pred(p, a).tolist():
                yield (p2, filt(p2, img))

    starts = {(p, q): (p, filt(p, 1 << q)) for p in range(aut.n) for q in range(aut.n)}
    losing = _bad_vertices(set(starts.values()), edges,
                           lambda v: bool(aut.initial[v[0]]) and not (v[1] & imask))
    bits = np.zeros((aut.n, aut.n), dtype=np.bool_)
    for (p, q), v in starts.items():
        bits[p, q] = v not in losing
    return Relation(bits, BW_DI, 0, closure=True)


def bounded_counting_inclusion(aut: Automaton, max_len: int = 8,
                               bound: int = ORACLE_BOUND) -> np.ndarray:
    """Counting-backward trace inclusion restricted to words of length ``<= max_len``.

    ``rel[p, q]`` holds when for every such word read by an initial trace
    ending in ``p`` some initial trace on the same word ends in ``q`` with at
    least as many accepting positions.  This over-approximates the unbounded
    relation, so any sound under-approximation of the latter is contained in it.
    """
    _check_bound(aut, bound)
    n = aut.n
    rel = np.ones((n, n), dtype=np.bool_)
    acc = aut.accepting.astype(np.int64)
    best0 = np.where(aut.initial, acc, -1)

    def visit(best, depth):
        live = best >= 0
        rel[live[:, None] & (best[None, :] < best[:, None])] = False
        if depth == max_len:
            return
        for a in range(aut.nsym):
            nxt = np.full(n, -1, dtype=np.int64)
            for p in np.flatnonzero(live).tolist():
                for r in aut.succ(p, a).tolist():
                    nxt[r] = max(nxt[r], best[p] + acc[r])
            if (nxt >= 0).any():
                visit(nxt, depth + 1)

    visit(best0, 0)
    return rel


# language equivalence and falsification

def nfa_language_equiv(a: Automaton, b: Automaton, budget: int = 200_000):
    """Exact NFA equivalence by breadth-first search of the determinized product.

    Returns ``(True, None)`` or ``(False, word)`` with a shortest word in the
    symmetric difference.
    """
    a, b = align_alphabets(a, b)
    ma, mb = _masks(a, False), _masks(b, False)
    fa = sum(1 << q for q in a.accepting_states())
    fb = sum(1 << q for q in b.accepting_states())
    start = (sum(1 << q for q in a.initial_states()), sum(1 << q for q in b.initial_states()))
    parent = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        sa, sb = v
        if bool(sa & fa) != bool(sb & fb):
            word = []
            while parent[v] is not None:
                v, sym = parent[v]
                word.append(a.symbols[sym])
            return False, tuple(reversed(word))
        for sym in range(a.nsym):
            w = (_image(ma, sa, sym), _image(mb, sb, sym))
            if w not in parent:
                if len(parent) >= budget:
                    raise OracleRefused("subset construction budget exceeded")
                parent[w] = (v, sym)
                queue.append(w)
    return True, None


def _words(symbols, lo, hi):
    for length in range(lo, hi + 1):
        yield from itertools.product(symbols, repeat=length)


class _LassoTable:
    """Per-automaton precomputation for fast membership of many short lassos."""

    def __init__(self, aut: Automaton, max_u: int, max_v: int):
        self.aut = aut
        n = aut.n
        adj = aut.adjacency().astype(np.int32)
        self.start = {(): aut.initial.copy()}
        for u in _words(range(aut.nsym), 1, max_u):
            prev = self.start[u[:-1]]
            self.start[u] = (prev.astype(np.int32) @ adj[u[-1]]) > 0
        accm = aut.accepting.astype(np.int32)
        blocks = {(): (np.eye(n, dtype=np.int32), np.zeros((n, n), dtype=np.int32))}
        self.cyc = {}
        self.star = {}
        for v in _words(range(aut.nsym), 1, max_v):
            reach, racc = blocks[v[:-1]]
            reach = np.minimum(reach @ adj[v[-1]], 1)
            racc = np.maximum(np.minimum(racc @ adj[v[-1]], 1), reach * accm[None, :])
            blocks[v] = (reach, racc)
            star = np.eye(n, dtype=np.bool_) | reach.astype(np.bool_)
            for j in range(n):
                col = star[:, j]
                if col.any():
                    star[col] |= star[j]
            self.star[v] = star.astype(np.int32)
            self.cyc[v] = ((racc @ self.star[v]) > 0).diagonal()

    def member(self, u, v) -> bool:
        s = self.start[u]
        if not s.any():
            return False
        reach = (s.astype(np.int32) @ self.star[v]) > 0
        return bool((reach & self.cyc[v]).any())


def nba_lasso_falsifier(a: Automaton, b: Automaton, max_u: int = 4, max_v: int = 4):
    """First lasso ``u v^omega`` with ``|u| <= max_u``, ``|v| <= max_v`` on which
    the Büchi languages of ``a`` and ``b`` differ, or ``None``."""
    a, b = align_alphabets(a, b)
    ta, tb = _LassoTable(a, max_u, max_v), _LassoTable(b, max_u, max_v)
    syms = range(a.nsym)
    for u in _words(syms, 0, max_u):
        for v in _words(syms, 1, max_v):
            if ta.member(u, v) != tb.member(u, v):
                return LassoWord(tuple(a.symbols[x] for x in u), tuple(a.symbols[x] for x in v))
    return None


def lasso_member_bruteforce(aut: Automaton, w: LassoWord) -> bool:
    """Acceptance of ``u v^omega`` by explicit search over (state, phase) runs."""
    u = [aut.symbol_id(s) for s in w.u]
    v = [aut.symbol_id(s) for s in w.v]
    cur = set(aut.initial_states())
    for x in u:
        cur = {r for p in cur for r in aut.succ(p, x).tolist()}
    # graph on (state, phase); an accepting cycle is a reachable cycle with an accepting node
    nodes = {(p, 0) for p in cur}
    stack = list(nodes)
    edges = {}
    while stack:
        p, i = stack.pop()
        out = [(r, (i + 1) % len(v)) for r in aut.succ(p, v[i]).tolist()]
        edges[(p, i)] = out
        for w2 in out:
            if w2 not in nodes:
                nodes.add(w2)
                stack.append(w2)
    for node in nodes:
        if not aut.accepting[node[0]]:
            continue
        seen = set()
        stack = list(edges[node])
        while stack:
            x = stack.pop()
            if x == node:
                return True
            if x in seen:
                continue
            seen.add(x)
            stack.extend(edges[x])
    return False
