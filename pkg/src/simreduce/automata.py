"""Automaton data model, the .ba text format and structural transforms.

States are dense integer ids ``0..n-1``; each state also carries a display
name used by the .ba writer.  Symbols are interned strings.  Transitions are
stored once as a lexicographically sorted ``(symbol, src, dst)`` array and
indexed twice in CSR form: ``fwd_ptr[p * nsym + a]`` delimits the successors
of ``p`` under symbol ``a`` inside ``fwd_idx`` and likewise for ``bwd``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

NBA = "NBA"
NFA = "NFA"
SEMANTICS = (NBA, NFA)


class BaParseError(ValueError):
    """Raised for malformed .ba input; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _csr(keys: np.ndarray, vals: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((vals, keys))
    counts = np.bincount(keys, minlength=size) if len(keys) else np.zeros(size, dtype=np.int64)
    ptr = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, vals[order].astype(np.int64)


class Automaton:
    """Immutable nondeterministic automaton with NBA or NFA semantics."""

    __slots__ = (
        "n", "symbols", "names", "initial", "accepting", "semantics",
        "trans", "fwd_ptr", "fwd_idx", "fwd_sym", "bwd_ptr", "bwd_idx", "bwd_sym",
        "_sym_index",
    )

    def __init__(
        self,
        n: int,
        symbols: Sequence[str],
        transitions: Iterable[tuple[int, int, int]],
        initial: Iterable[int],
        accepting: Iterable[int],
        semantics: str = NBA,
        names: Sequence[str] | None = None,
    ):
        if semantics not in SEMANTICS:
            raise ValueError(f"unknown semantics {semantics!r}")
        if n < 1:
            raise ValueError("an automaton needs at least one state")
        self.n = int(n)
        self.symbols = tuple(symbols)
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols")
        self._sym_index = {s: i for i, s in enumerate(self.symbols)}
        self.names = tuple(names) if names is not None else tuple(str(i) for i in range(n))
        if len(self.names) != n or len(set(self.names)) != n:
            raise ValueError("state names must be unique, one per state")
        self.semantics = semantics
        self.initial = np.zeros(n, dtype=np.bool_)
        self.accepting = np.zeros(n, dtype=np.bool_)
        for arr, ids in ((self.initial, initial), (self.accepting, accepting)):
            for q in ids:
                if not 0 <= q < n:
                    raise ValueError(f"state id {q} out of range")
                arr[q] = True
        t = np.array(sorted(set(map(tuple, transitions))), dtype=np.int64).reshape(-1, 3)
        nsym = len(self.symbols)
        if len(t):
            if t[:, 0].min() < 0 or t[:, 0].max() >= nsym:
                raise ValueError("symbol id out of range")
            if t[:, 1:].min() < 0 or t[:, 1:].max() >= n:
                raise ValueError("state id out of range")
        self.trans = t
        self.trans.setflags(write=False)
        size = n * max(nsym, 1)
        sym, src, dst = t[:, 0], t[:, 1], t[:, 2]
        self.fwd_ptr, self.fwd_idx = _csr(src * nsym + sym, dst, size)
        self.bwd_ptr, self.bwd_idx = _csr(dst * nsym + sym, src, size)
        # symbol of each CSR slot, so kernels can walk all edges of a state
        self.fwd_sym = np.repeat(np.tile(np.arange(nsym), n), np.diff(self.fwd_ptr)).astype(np.int64) if nsym else np.zeros(0, np.int64)
        self.bwd_sym = np.repeat(np.tile(np.arange(nsym), n), np.diff(self.bwd_ptr)).astype(np.int64) if nsym else np.zeros(0, np.int64)
        for arr in (self.initial, self.accepting, self.fwd_ptr, self.fwd_idx, self.fwd_sym,
                    self.bwd_ptr, self.bwd_idx, self.bwd_sym):
            arr.setflags(write=False)

    # basic queries

    @property
    def nsym(self) -> int:
        return len(self.symbols)

    @property
    def n_transitions(self) -> int:
        return len(self.trans)

    def symbol_id(self, s: str) -> int:
        try:
            return self._sym_index[s]
        except KeyError:
            raise KeyError(f"unknown symbol {s!r}") from None

    def succ(self, p: int, a: int) -> np.ndarray:
        k = p * self.nsym + a
        return self.fwd_idx[self.fwd_ptr[k]:self.fwd_ptr[k + 1]]

    def pred(self, p: int, a: int) -> np.ndarray:
        k = p * self.nsym + a
        return self.bwd_idx[self.bwd_ptr[k]:self.bwd_ptr[k + 1]]

    def initial_states(self) -> list[int]:
        return np.flatnonzero(self.initial).tolist()

    def accepting_states(self) -> list[int]:
        return np.flatnonzero(self.accepting).tolist()

    def transitions(self) -> list[tuple[int, int, int]]:
        """All transitions as ``(src, symbol, dst)`` triples."""
        return [(int(p), int(a), int(q)) for a, p, q in self.trans]

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.trans[:, 1], minlength=self.n)

    def adjacency(self) -> np.ndarray:
        """Boolean matrices ``M[a, p, q]``, one per symbol."""
        m = np.zeros((self.nsym, self.n, self.n), dtype=np.bool_)
        m[self.trans[:, 0], self.trans[:, 1], self.trans[:, 2]] = True
        return m

    def replace(self, **changes) -> "Automaton":
        fields = dict(
            n=self.n, symbols=self.symbols, transitions=self.transitions_sym_first(),
            initial=self.initial_states(), accepting=self.accepting_states(),
            semantics=self.semantics, names=self.names,
        )
        fields.update(changes)
        return Automaton(**fields)

    def transitions_sym_first(self) -> list[tuple[int, int, int]]:
        return [tuple(map(int, row)) for row in self.trans]

    def with_semantics(self, semantics: str) -> "Automaton":
        return self if semantics == self.semantics else self.replace(semantics=semantics)

    def stats(self) -> "AutomatonStats":
        return AutomatonStats(
            states=self.n,
            transitions=self.n_transitions,
            transition_density=Fraction(self.n_transitions, self.n * max(self.nsym, 1)),
            accepting_count=int(self.accepting.sum()),
        )

    # structural equality by state names

    def _labeled(self):
        nm = self.names
        return (
            self.semantics,
            frozenset(nm[q] for q in self.initial_states()),
            frozenset(nm[q] for q in self.accepting_states()),
            frozenset((self.symbols[a], nm[p], nm[q]) for a, p, q in self.trans),
            frozenset(nm),
        )

    def __eq__(self, other):
        if not isinstance(other, Automaton):
            return NotImplemented
        return self._labeled() == other._labeled()

    def __hash__(self):
        return hash(self._labeled())

    def same_structure(self, other: "Automaton") -> bool:
        """Equality on ids, ignoring names and alphabet order of unused symbols."""
        return (
            self.n == other.n and self.symbols == other.symbols
            and self.semantics == other.semantics
            and np.array_equal(self.initial, other.initial)
            and np.array_equal(self.accepting, other.accepting)
            and np.array_equal(self.trans, other.trans)
        )

    def size_key(self) -> tuple[int, int]:
        return (self.n, self.n_transitions)

    def __repr__(self):
        return (f"Automaton({self.semantics}, states={self.n}, transitions={self.n_transitions}, "
                f"symbols={self.nsym}, initial={self.initial_states()}, "
                f"accepting={int(self.accepting.sum())})")


@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word ``u v^omega`` over symbol strings."""

    u: tuple[str, ...]
    v: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(self.u))
        object.__setattr__(self, "v", tuple(self.v))
        if not self.v:
            raise ValueError("the periodic part of a lasso must be nonempty")

    def __str__(self):
        return f"{' '.join(self.u)} $ {' '.join(self.v)}".strip()


@dataclass(frozen=True)
class AutomatonStats:
    states: int
    transitions: int
    transition_density: Fraction
    accepting_count: int


def make_automaton(
    transitions: Iterable[tuple[str, str, str]],
    initial: Iterable[str],
    accepting: Iterable[str] = (),
    semantics: str = NBA,
    states: Iterable[str] = (),
    symbols: Iterable[str] = (),
) -> Automaton:
    """Build an automaton from named ``(src, symbol, dst)`` triples.

    State ids follow first appearance over ``states``, ``initial``,
    the transitions and ``accepting`` in that order.
    """
    transitions = list(transitions)
    initial = list(initial)
    accepting = list(accepting)
    ids: dict[str, int] = {}
    syms: dict[str, int] = {}
    for s in symbols:
        syms.setdefault(s, len(syms))

    def sid(name):
        return ids.setdefault(name, len(ids))

    for s in states:
        sid(s)
    for s in initial:
        sid(s)
    triples = []
    for p, a, q in transitions:
        triples.append((syms.setdefault(a, len(syms)), sid(p), sid(q)))
    for s in accepting:
        sid(s)
    names = sorted(ids, key=ids.get)
    return Automaton(
        len(ids), sorted(syms, key=syms.get), triples,
        [ids[s] for s in initial], [ids[s] for s in accepting], semantics, names,
    )


# .ba format

_TRANS_RE = re.compile(r"^\s*([^,\s][^,]*?)\s*,\s*\[([^\[\]]+)\]\s*->\s*\[([^\[\]]+)\]\s*$")
_STATE_RE = re.compile(r"^\s*\[([^\[\]]+)\]\s*$")


def parse_ba(text: str | bytes, semantics: str = NBA) -> Automaton:
    """Parse the .ba format.

    Leading ``[id]`` lines before the first transition are initial states
    (several of them is an accepted extension); ``[id]`` lines after the
    transitions are accepting states.  When the file has no transitions the
    first line is the initial state and the remaining lines are accepting.
    When the file starts directly with a transition, its source is initial.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        m = _TRANS_RE.match(raw)
        if m:
            rows.append((lineno, "t", m.groups()))
            continue
        m = _STATE_RE.match(raw)
        if m:
            rows.append((lineno, "s", m.group(1).strip()))
            continue
        raise BaParseError(lineno, f"malformed line {raw.strip()!r}")
    if not rows:
        raise BaParseError(1, "empty input")
    kinds = [k for _, k, _ in rows]
    if "t" in kinds:
        first_t = kinds.index("t")
        last_t = len(kinds) - 1 - kinds[::-1].index("t")
        for lineno, kind, _ in rows[first_t:last_t + 1]:
            if kind != "t":
                raise BaParseError(lineno, "state line between transition lines")
        init = [v for _, _, v in rows[:first_t]]
        if not init:
            init = [rows[first_t][2][1].strip()]
        trans = [(g[1].strip(), g[0].strip(), g[2].strip()) for _, _, g in rows[first_t:last_t + 1]]
        acc = [v for _, _, v in rows[last_t + 1:]]
    else:
        init = [rows[0][2]]
        trans = []
        acc = [v for _, _, v in rows[1:]]
    return make_automaton(trans, init, acc, semantics)


def _name_key(name: str):
    return (0, int(name), "") if name.isdigit() else (1, 0, name)


def write_ba(aut: Automaton) -> str:
    """Canonical .ba text: initial lines, sorted transitions, sorted accepting lines.

    States are ordered by name, numeric names by value, so the text does
    not depend on internal state ids.
    """
    nm = aut.names
    inits = aut.initial_states()
    if not inits:
        raise ValueError(".ba needs at least one initial state")
    if aut.n_transitions == 0 and len(inits) > 1:
        raise ValueError("several initial states without transitions cannot be written as .ba")
    key = [_name_key(x) for x in nm]
    lines = [f"[{nm[q]}]" for q in sorted(inits, key=key.__getitem__)]
    rows = sorted((aut.symbols[a], key[p], key[q], p, q) for a, p, q in aut.trans.tolist())
    lines += [f"{s},[{nm[p]}]->[{nm[q]}]" for s, _, _, p, q in rows]
    lines += [f"[{nm[q]}]" for q in sorted(aut.accepting_states(), key=key.__getitem__)]
    return "\n".join(lines) + "\n"


def to_timbuk(aut: Automaton, name: str = "A") -> str:
    """Best-effort NFA to bottom-up tree automaton conversion.

    Every word symbol becomes a unary operator and a fresh nullary leaf
    symbol produces the initial states, so ``a_n(...a_1(leaf))`` is accepted
    exactly when ``a_1...a_n`` is accepted by the NFA.
    """
    leaf = "x"
    while leaf in aut.symbols:
        leaf += "_"
    nm = [f"q{i}" for i in range(aut.n)]
    ops = " ".join([f"{s}:1" for s in aut.symbols] + [f"{leaf}:0"])
    lines = [
        f"Ops {ops}",
        "",
        f"Automaton {name}",
        "States " + " ".join(nm),
        "Final States " + " ".join(nm[q] for q in aut.accepting_states()),
        "Transitions",
    ]
    lines += [f"{leaf} -> {nm[q]}" for q in aut.initial_states()]
    lines += [f"{aut.symbols[a]}({nm[p]}) -> {nm[q]}" for a, p, q in aut.trans.tolist()]
    return "\n".join(lines) + "\n"


# alphabets and combinations

def extend_alphabet(aut: Automaton, symbols: Sequence[str]) -> Automaton:
    """Re-intern ``aut`` over ``symbols``, which must contain its alphabet."""
    symbols = tuple(symbols)
    if symbols == aut.symbols:
        return aut
    index = {s: i for i, s in enumerate(symbols)}
    remap = [index[s] for s in aut.symbols]
    trans = [(remap[a], p, q) for a, p, q in aut.trans.tolist()]
    return aut.replace(symbols=symbols, transitions=trans)


def align_alphabets(a: Automaton, b: Automaton) -> tuple[Automaton, Automaton]:
    symbols = list(a.symbols) + [s for s in b.symbols if s not in a._sym_index]
    return extend_alphabet(a, symbols), extend_alphabet(b, symbols)


def disjoint_union(a: Automaton, b: Automaton) -> tuple[Automaton, int]:
    """Union with B's states shifted by ``a.n``; names get side prefixes."""
    a, b = align_alphabets(a, b)
    off = a.n
    trans = a.transitions_sym_first() + [(s, p + off, q + off) for s, p, q in b.trans.tolist()]
    names = [f"A.{x}" for x in a.names] + [f"B.{x}" for x in b.names]
    u = Automaton(
        a.n + b.n, a.symbols, trans,
        a.initial_states() + [q + off for q in b.initial_states()],
        a.accepting_states() + [q + off for q in b.accepting_states()],
        a.semantics, names,
    )
    return u, off


def product_reachable(a: Automaton, b: Automaton) -> set[tuple[int, int]]:
    """Pairs reachable from ``I_A x I_B`` under synchronized transitions."""
    a, b = align_alphabets(a, b)
    seen = {(p, q) for p in a.initial_states() for q in b.initial_states()}
    stack = list(seen)
    while stack:
        p, q = stack.pop()
        for s in range(a.nsym):
            sa = a.succ(p, s)
            if not len(sa):
                continue
            sb = b.succ(q, s)
            for p2 in sa.tolist():
                for q2 in sb.tolist():
                    if (p2, q2) not in seen:
                        seen.add((p2, q2))
                        stack.append((p2, q2))
    return seen


# reachability helpers

def _reach(aut: Automaton, start: np.ndarray, backward: bool = False) -> np.ndarray:
    ptr, idx = (aut.bwd_ptr, aut.bwd_idx) if backward else (aut.fwd_ptr, aut.fwd_idx)
    nsym = aut.nsym
    seen = start.copy()
    stack = np.flatnonzero(seen).tolist()
    while stack:
        p = stack.pop()
        for q in idx[ptr[p * nsym]:ptr[(p + 1) * nsym]].tolist():
            if not seen[q]:
                seen[q] = True
                stack.append(q)
    return seen


def scc_labels(aut: Automaton) -> np.ndarray:
    g = csr_matrix(
        (np.ones(aut.n_transitions, dtype=np.int8), (aut.trans[:, 1], aut.trans[:, 2])),
        shape=(aut.n, aut.n),
    )
    _, labels = connected_components(g, directed=True, connection="strong")
    return labels


def empty_automaton(aut: Automaton) -> Automaton:
    """Canonical empty-language automaton over the alphabet of ``aut``."""
    return Automaton(1, aut.symbols, [], [0], [], aut.semantics, ["0"])


def is_empty_canonical(aut: Automaton) -> bool:
    return aut.n == 1 and aut.n_transitions == 0 and not aut.accepting.any()


def live_states(aut: Automaton) -> np.ndarray:
    """Mask of states that are reachable and can still produce an accepted word."""
    reach = _reach(aut, aut.initial)
    if aut.semantics == NFA:
        good = aut.accepting.copy()
    else:
        labels = scc_labels(aut)
        sizes = np.bincount(labels, minlength=aut.n)
        selfloop = np.zeros(aut.n, dtype=np.bool_)
        selfloop[aut.trans[aut.trans[:, 1] == aut.trans[:, 2], 1]] = True
        cyclic = (sizes[labels] > 1) | selfloop
        acc_scc = np.zeros(labels.max() + 1, dtype=np.bool_)
        acc_scc[labels[aut.accepting & cyclic]] = True
        good = acc_scc[labels] & cyclic
    return reach & _reach(aut, good, backward=True)


def restrict(aut: Automaton, keep: np.ndarray) -> tuple[Automaton, np.ndarray]:
    """Sub-automaton on the states in mask ``keep``; returns it and an old-to-new map (-1 if gone)."""
    new_id = np.full(aut.n, -1, dtype=np.int64)
    new_id[keep] = np.arange(int(keep.sum()))
    t = aut.trans
    mask = keep[t[:, 1]] & keep[t[:, 2]]
    t = t[mask]
    trans = np.stack([t[:, 0], new_id[t[:, 1]], new_id[t[:, 2]]], axis=1).tolist() if len(t) else []
    res = Automaton(
        int(keep.sum()), aut.symbols, trans,
        new_id[aut.initial & keep].tolist(), new_id[aut.accepting & keep].tolist(),
        aut.semantics, [aut.names[i] for i in np.flatnonzero(keep)],
    )
    return res, new_id


def remove_dead(aut: Automaton) -> tuple[Automaton, np.ndarray]:
    """Drop states that cannot occur on an accepting run.

    Returns the trimmed automaton and an old-to-new state map (-1 for removed
    states).  An empty language yields the canonical one-state automaton.
    """
    live = live_states(aut)
    if live.all():
        return aut, np.arange(aut.n)
    if not live.any():
        return empty_automaton(aut), np.full(aut.n, -1, dtype=np.int64)
    return restrict(aut, live)


def trim(aut: Automaton) -> Automaton:
    return remove_dead(aut)[0]


def transient_transitions(aut: Automaton) -> set[tuple[int, int, int]]:
    """Transitions ``(p, a, r)`` whose target cannot reach their source."""
    labels = scc_labels(aut)
    return {(p, a, r) for a, p, r in aut.trans.tolist() if labels[p] != labels[r]}


def transient_mask(aut: Automaton) -> np.ndarray:
    """Per-row version of :func:`transient_transitions` aligned with ``aut.trans``."""
    labels = scc_labels(aut)
    return labels[aut.trans[:, 1]] != labels[aut.trans[:, 2]]


def _is_single_accepting_form(aut: Automaton) -> bool:
    out = aut.out_degree()
    non_initial = np.flatnonzero(aut.accepting & ~aut.initial)
    return len(non_initial) <= 1 and all(out[q] == 0 for q in non_initial)


def single_accepting_transform(aut: Automaton) -> Automaton:
    """Equivalent NFA whose only non-initial accepting state has no successors.

    A fresh state ``acc`` receives a twin of every transition entering an
    accepting state and becomes the sole accepting state; accepting initial
    states stay accepting so that the empty word is kept.  Inputs already in
    this form are returned unchanged.
    """
    if aut.semantics != NFA:
        raise ValueError("single_accepting_transform needs NFA semantics")
    if _is_single_accepting_form(aut):
        return aut
    acc = aut.n
    name = "acc"
    while name in aut.names:
        name = "_" + name
    trans = aut.transitions_sym_first()
    trans += [(a, p, acc) for a, p, q in aut.trans.tolist() if aut.accepting[q]]
    return Automaton(
        aut.n + 1, aut.symbols, trans, aut.initial_states(),
        [q for q in aut.initial_states() if aut.accepting[q]] + [acc],
        NFA, list(aut.names) + [name],
    )


def complete(aut: Automaton) -> Automaton:
    """Add a forward sink and a backward source so every state has successors
    and predecessors under every symbol.  Neither new state is initial or
    accepting, so the language is unchanged."""
    n, nsym = aut.n, aut.nsym
    sink, src = n, n + 1
    trans = aut.transitions_sym_first()
    for a in range(nsym):
        trans.append((a, sink, sink))
        trans.append((a, src, src))
        for p in range(n):
            if not len(aut.succ(p, a)):
                trans.append((a, p, sink))
            if not len(aut.pred(p, a)):
                trans.append((a, src, p))
    names = list(aut.names)
    for base in ("sink", "source"):
        nm = base
        while nm in names:
            nm = "_" + nm
        names.append(nm)
    return Automaton(n + 2, aut.symbols, trans, aut.initial_states(), aut.accepting_states(),
                     aut.semantics, names)


# membership

def _word_ids(aut: Automaton, word: Sequence[str]) -> list[int]:
    return [aut.symbol_id(s) for s in word]


def _post(aut: Automaton, states: np.ndarray, a: int) -> np.ndarray:
    nxt = np.zeros(aut.n, dtype=np.bool_)
    for p in np.flatnonzero(states).tolist():
        nxt[aut.succ(p, a)] = True
    return nxt


def word_member(aut: Automaton, word: Sequence[str]) -> bool:
    """Finite-word acceptance by forward subset propagation."""
    cur = aut.initial.copy()
    for a in _word_ids(aut, word):
        cur = _post(aut, cur, a)
        if not cur.any():
            return False
    return bool((cur & aut.accepting).any())


def _block_matrices(aut: Automaton, v: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Reachability over one period ``v``: plain and through an accepting position.

    Positions counted are those after each letter, so every position of the
    infinite run lies in exactly one block.
    """
    adj = aut.adjacency().astype(np.int32)
    reach = np.eye(aut.n, dtype=np.int32)
    racc = np.zeros((aut.n, aut.n), dtype=np.int32)
    accm = aut.accepting.astype(np.int32)
    for a in v:
        reach = np.minimum(reach @ adj[a], 1)
        racc = np.minimum(racc @ adj[a], 1)
        racc = np.maximum(racc, reach * accm[None, :])
    return reach.astype(np.bool_), racc.astype(np.bool_)


def _closure(m: np.ndarray) -> np.ndarray:
    """Reflexive-transitive closure of a square boolean matrix."""
    r = m | np.eye(len(m), dtype=np.bool_)
    while True:
        r2 = (r.astype(np.int32) @ r.astype(np.int32)) > 0
        if np.array_equal(r2, r):
            return r
        r = r2


def lasso_member(aut: Automaton, w: LassoWord) -> bool:
    """Whether ``u v^omega`` is accepted under Büchi semantics."""
    u, v = _word_ids(aut, w.u), _word_ids(aut, w.v)
    cur = aut.initial.copy()
    for a in u:
        cur = _post(aut, cur, a)
    if not cur.any() or not aut.accepting.any():
        return False
    reach, racc = _block_matrices(aut, v)
    star = _closure(reach)
    start = (cur.astype(np.int32) @ star.astype(np.int32)) > 0
    # some state s reachable from start with an accepting block s -> t and t ->* s
    cyc = ((racc.astype(np.int32) @ star.astype(np.int32)) > 0).diagonal()
    return bool((start & cyc).any())
