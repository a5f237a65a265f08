"""k-lookahead simulation relations and derived preorders.

A relation is stored as a boolean matrix ``bits[p, q]`` meaning that
Duplicator, playing from ``q``, wins against Spoiler playing from ``p``.
Same-automaton relations are square; cross relations relate the states of a
left automaton (rows) to those of a right automaton (columns).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .automata import NFA, Automaton, align_alphabets, disjoint_union


class WinningCondition(enum.Enum):
    DIRECT = "di"
    DELAYED = "de"
    FAIR = "f"
    BACKWARD_DIRECT = "bw-di"
    BACKWARD_FINITE = "bw"
    BACKWARD_COUNTING = "bw-c"

    @property
    def backward(self) -> bool:
        return self in (WinningCondition.BACKWARD_DIRECT, WinningCondition.BACKWARD_FINITE,
                        WinningCondition.BACKWARD_COUNTING)


DI = WinningCondition.DIRECT
DE = WinningCondition.DELAYED
FAIR = WinningCondition.FAIR
BW_DI = WinningCondition.BACKWARD_DIRECT
BW = WinningCondition.BACKWARD_FINITE
BW_C = WinningCondition.BACKWARD_COUNTING


@dataclass(frozen=True)
class Relation:
    """Boolean relation matrix with provenance.

    ``closure`` marks a reflexive-transitive closure; ``offset`` is ``None``
    for same-automaton relations and the column shift used in the disjoint
    union for cross relations.
    """

    bits: np.ndarray
    cond: WinningCondition | None
    k: int
    closure: bool = False
    offset: int | None = None

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    @property
    def square(self) -> bool:
        return self.rows == self.cols and self.offset is None

    def __contains__(self, pair) -> bool:
        p, q = pair
        return bool(self.bits[p, q])

    def pairs(self) -> list[tuple[int, int]]:
        return [tuple(x) for x in np.argwhere(self.bits).tolist()]

    def size(self) -> int:
        return int(self.bits.sum())

    def dump(self) -> str:
        """One ``p q`` pair per line, sorted; for diffing against oracles."""
        return "".join(f"{p} {q}\n" for p, q in self.pairs())


def identity_relation(n: int) -> Relation:
    return Relation(np.eye(n, dtype=np.bool_), None, 1, closure=True)


def _check_k(k: int) -> int:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"lookahead must be a positive integer, got {k!r}")
    return int(k)


def _graph(aut: Automaton, backward: bool):
    if backward:
        return aut.bwd_ptr, aut.bwd_idx, aut.bwd_sym
    return aut.fwd_ptr, aut.fwd_idx, aut.fwd_sym


def prefilter_depth(nsym: int, budget: int = 256, max_depth: int = 8) -> int:
    """Largest depth whose number of words of maximal length stays within ``budget``."""
    if nsym <= 1:
        return max_depth
    return max(1, min(max_depth, int(math.log(budget) / math.log(nsym) + 1e-9)))


def _readable(aut: Automaton, depth: int, backward: bool) -> list[np.ndarray]:
    """Per length l, a matrix ``R[p, w]`` telling whether word ``w`` of length l
    can be read from ``p`` (backwards if requested)."""
    adj = aut.adjacency().astype(np.int32)
    if backward:
        adj = adj.transpose(0, 2, 1)
    levels = [np.ones((aut.n, 1), dtype=np.bool_)]
    for _ in range(depth):
        prev = levels[-1].astype(np.int32)
        levels.append(np.concatenate([(adj[a] @ prev) > 0 for a in range(aut.nsym)], axis=1))
    return levels[1:]


def short_word_prefilter(spoiler: Automaton, duplicator: Automaton | None = None,
                         depth: int | None = None, backward: bool = False) -> np.ndarray:
    """Mark ``(p, q)`` when a word of length at most ``depth`` can be read from
    ``p`` but not from ``q``; such pairs are Spoiler wins under every condition."""
    if duplicator is None:
        duplicator = spoiler
    spoiler, duplicator = align_alphabets(spoiler, duplicator)
    if depth is None:
        depth = prefilter_depth(spoiler.nsym)
    if depth > 8:
        raise ValueError("prefilter depth is limited to 8")
    marked = np.zeros((spoiler.n, duplicator.n), dtype=np.bool_)
    if spoiler.nsym == 0 or depth < 1:
        return marked
    for rs, rd in zip(_readable(spoiler, depth, backward), _readable(duplicator, depth, backward)):
        marked |= (rs.astype(np.int32) @ (~rd).T.astype(np.int32)) > 0
    return marked


def _solve(sp: Automaton, du: Automaton, k: int, cond: WinningCondition,
           prefilter: bool) -> np.ndarray:
    """Duplicator-win matrix of the game with Spoiler on ``sp`` and Duplicator on ``du``."""
    bw = cond.backward
    s_ptr, s_idx, s_sym = _graph(sp, bw)
    d_ptr, d_idx, _ = _graph(du, bw)
    nsym = sp.nsym
    if nsym == 0:
        # no moves at all: every Spoiler state is stuck
        s_ptr = np.zeros(sp.n + 1, dtype=np.int64)
        d_ptr = np.zeros(du.n + 1, dtype=np.int64)
        nsym = 1
    s_f, s_i, d_f, d_i = sp.accepting, sp.initial, du.accepting, du.initial
    seed = (short_word_prefilter(sp, du, backward=bw) if prefilter
            else np.zeros((sp.n, du.n), dtype=np.bool_))
    viol_f = s_f[:, None] & ~d_f[None, :]
    viol_i = s_i[:, None] & ~d_i[None, :]
    if cond in (DI, BW_DI, BW):
        if cond is DI:
            filt, W = K.FILTER_F, viol_f
        elif cond is BW_DI:
            filt, W = K.FILTER_F | K.FILTER_I, viol_f | viol_i
        else:
            filt, W = K.FILTER_I, viol_i
        W = np.ascontiguousarray(W | seed)
        K.solve_plain(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, s_i, d_f, d_i, filt, W)
        return ~W
    if cond is DE:
        W = np.ascontiguousarray(seed.copy())
        K.solve_delayed(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, W)
        return ~W
    if cond is FAIR:
        Z = np.ascontiguousarray(seed.copy())
        K.solve_fair(k, nsym, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, d_f, Z)
        return ~Z
    if cond is BW_C:
        cap = counting_cap(k, max(sp.n, du.n))
        T = np.zeros((sp.n, du.n), dtype=np.int64)
        T[seed] = cap + 1
        K.solve_counting(k, nsym, cap, s_ptr, s_idx, s_sym, d_ptr, d_idx, s_f, s_i, d_f, d_i, T)
        c0 = d_f[None, :].astype(np.int64) - s_f[:, None].astype(np.int64)
        return ~viol_i & (c0 >= 0) & (c0 >= T)
    raise ValueError(f"unsupported condition {cond}")


def counting_cap(k: int, n: int) -> int:
    """Credit bound for the counting-backward game."""
    return k * n


def solve_lookahead(aut: Automaton, k: int, cond: WinningCondition,
                    prefilter: bool = True) -> Relation:
    """Raw k-lookahead simulation relation of ``aut`` for ``cond``."""
    k = _check_k(k)
    return Relation(_solve(aut, aut, k, cond, prefilter), cond, k)


def solve_cross(a: Automaton, b: Automaton, k: int, cond: WinningCondition,
                prefilter: bool = True) -> Relation:
    """The ``A x B`` block of the relation on the disjoint union.

    Only A-states are ever visited by Spoiler and only B-states by
    Duplicator from such a block, so the block is computed directly.
    """
    k = _check_k(k)
    a, b = align_alphabets(a, b)
    return Relation(_solve(a, b, k, cond, prefilter), cond, k, offset=a.n)


def solve_cross_via_union(a: Automaton, b: Automaton, k: int, cond: WinningCondition) -> Relation:
    u, off = disjoint_union(a, b)
    full = solve_lookahead(u, k, cond)
    return Relation(full.bits[:off, off:].copy(), cond, k, offset=off)


def closure_matrix(m: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a square boolean matrix (Warshall)."""
    r = m.copy()
    np.fill_diagonal(r, True)
    for j in range(len(r)):
        col = r[:, j]
        if col.any():
            r[col] |= r[j]
    return r


def transitive_closure(rel: Relation) -> Relation:
    if not rel.square:
        raise ValueError("transitive closure needs a square same-automaton relation")
    if rel.closure:
        return rel
    return replace(rel, bits=closure_matrix(rel.bits), closure=True)


def strict_part(rel: Relation) -> Relation:
    """``R minus R^-1`` of a preorder."""
    if not rel.square:
        raise ValueError("strict part needs a square relation")
    if not rel.closure and not (rel.k == 1 and rel.cond not in (BW_C,)):
        raise ValueError("strict part of a raw lookahead relation with k >= 2 is not defined; close it first")
    b = rel.bits
    return replace(rel, bits=b & ~b.T)


def lookahead_preorder(aut: Automaton, k: int, cond: WinningCondition) -> Relation:
    """Transitive closure of the k-lookahead relation."""
    return transitive_closure(solve_lookahead(aut, k, cond))


def counting_backward(aut: Automaton, k: int, other: Automaton | None = None) -> Relation:
    """Raw k-lookahead counting-backward relation.

    Duplicator must match initial states whenever Spoiler is initial and must
    never fall behind in the number of accepting visits, where the comparison
    is made at every round boundary and at every Spoiler-initial position.
    """
    k = _check_k(k)
    if other is None:
        return Relation(_solve(aut, aut, k, BW_C, True), BW_C, k)
    a, b = align_alphabets(aut, other)
    return Relation(_solve(a, b, k, BW_C, True), BW_C, k, offset=a.n)


def jump_automaton(b: Automaton, jump: np.ndarray) -> tuple[Automaton, np.ndarray]:
    """Duplicator arena for jumping simulation.

    For NBA each state ``q`` is split into ``(q, bit)`` where ``bit`` records
    whether the step that entered it was accepting, i.e. whether some
    accepting ``q''`` satisfied ``q <= q'' <= q'`` for the jump target ``q'``.
    For NFA the states are kept and ``q`` becomes accepting when it is below
    some accepting state.  Returns the arena and the ids of the copies of
    B's states that serve as starting points.
    """
    n = b.n
    jump = jump.copy()
    np.fill_diagonal(jump, True)
    acc = b.accepting
    # through[q, q'] iff q <= q'' <= q' for some accepting q''
    through = (jump[:, acc].astype(np.int32) @ jump[acc, :].astype(np.int32)) > 0
    trans = set()
    if b.semantics == NFA:
        for q in range(n):
            for q2 in np.flatnonzero(jump[q]).tolist():
                for a in range(b.nsym):
                    for r in b.succ(q2, a).tolist():
                        trans.add((a, q, r))
        up_acc = jump[:, acc].any(axis=1)
        arena = Automaton(n, b.symbols, trans, b.initial_states(), np.flatnonzero(up_acc).tolist(),
                          NFA)
        return arena, np.arange(n)
    for q in range(n):
        for q2 in np.flatnonzero(jump[q]).tolist():
            bit = int(through[q, q2])
            for a in range(b.nsym):
                for r in b.succ(q2, a).tolist():
                    for src_bit in (0, 1):
                        trans.add((a, 2 * q + src_bit, 2 * r + bit))
    arena = Automaton(2 * n, b.symbols, trans, [2 * q for q in b.initial_states()],
                      [2 * q + 1 for q in range(n)], b.semantics)
    return arena, 2 * np.arange(n)


def jumping_relation(a: Automaton, b: Automaton, k: int, jump: Relation) -> np.ndarray:
    """Jumping simulation of A's states by B's states (fair for NBA, direct for NFA)."""
    k = _check_k(k)
    if jump.bits.shape != (b.n, b.n):
        raise ValueError("jump relation must be over the states of B")
    a, b = align_alphabets(a, b)
    arena, start = jump_automaton(b, jump.bits)
    cond = DI if b.semantics == NFA else FAIR
    return _solve(a, arena, k, cond, prefilter=False)[:, start]


def jumping_fair(a: Automaton, b: Automaton, k: int, jump: Relation) -> bool:
    """Whether every initial A-state is jumping-simulated by an initial B-state."""
    rel = jumping_relation(a, b, k, jump)
    ib = b.initial
    return all(bool((rel[p] & ib).any()) for p in a.initial_states())
