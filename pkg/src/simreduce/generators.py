"""Tabakov-Vardi random automata and the exact universality probability.

The random source is SplitMix64, fixed here so that corpora can be
regenerated bit for bit by any implementation of the same recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .automata import NBA, Automaton

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """``state += GOLDEN; z = state; z = (z ^ z>>30) * C1; z = (z ^ z>>27) * C2; out = z ^ z>>31``."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection of the biased tail."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next()
            if x < limit:
                return x % bound

    def sample(self, population: int, count: int) -> list[int]:
        """``count`` distinct values of ``range(population)``, ascending (Floyd's algorithm)."""
        if count > population:
            raise ValueError("sample larger than population")
        chosen = set()
        for j in range(population - count, population):
            t = self.below(j + 1)
            chosen.add(j if t in chosen else t)
        return sorted(chosen)


def derive_seed(base: int, index: int) -> int:
    """Seed of the ``index``-th instance of a corpus: first output of SplitMix64
    started at ``base + index * GOLDEN``."""
    return SplitMix64((base + index * GOLDEN) & MASK64).next()


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class TVParams:
    n: int
    sigma: int
    td: Fraction | float
    ad: Fraction | float
    seed: int = 0

    @property
    def transitions_per_symbol(self) -> int:
        return math.floor(self.n * _as_fraction(self.td))

    @property
    def accepting_count(self) -> int:
        return math.ceil(self.n * _as_fraction(self.ad))

    def validate(self):
        if self.n < 1 or self.sigma < 1:
            raise ValueError("n and sigma must be positive")
        ad = _as_fraction(self.ad)
        if not 0 < ad <= 1:
            raise ValueError("acceptance density must lie in (0, 1]")
        if _as_fraction(self.td) < 0:
            raise ValueError("transition density must be nonnegative")
        if self.transitions_per_symbol > self.n * self.n:
            raise ValueError(f"T = {self.transitions_per_symbol} exceeds n^2 = {self.n * self.n}")


def alphabet(sigma: int) -> list[str]:
    if sigma <= 26:
        return [chr(ord("a") + i) for i in range(sigma)]
    return [f"s{i}" for i in range(sigma)]


def tabakov_vardi(p: TVParams, semantics: str = NBA) -> Automaton:
    """Random automaton: per symbol ``floor(n*td)`` distinct transitions drawn from
    the ``n x n`` grid, then ``ceil(n*ad)`` accepting states; state 0 is initial.

    Grid cell ``c`` encodes the transition ``c // n -> c % n``.
    """
    p.validate()
    rng = SplitMix64(p.seed)
    n, t = p.n, p.transitions_per_symbol
    trans = []
    for a in range(p.sigma):
        for c in rng.sample(n * n, t):
            trans.append((a, c // n, c % n))
    acc = rng.sample(n, p.accepting_count)
    return Automaton(n, alphabet(p.sigma), trans, [0], acc, semantics)


def comb(a: int, b: int) -> int:
    """Binomial coefficient, zero when ``b < 0`` or ``b > a`` (also for negative ``a``)."""
    if b < 0 or a < 0 or b > a:
        return 0
    return math.comb(a, b)


@lru_cache(maxsize=8)
def _cover_counts(n: int) -> tuple[int, ...]:
    """``S(m) = sum_i (-1)^i C(n,i) C(m-i*n-1, n-1)`` for ``m = n..n^2``.

    For fixed ``i`` the second binomial is advanced along ``m`` with the
    ratio ``C(y+1, r) = C(y, r) (y+1) / (y+1-r)``.
    """
    size = n * n - n + 1
    out = [0] * size
    r = n - 1
    for i in range(0, n + 1):
        ci = comb(n, i)
        sign = -1 if i % 2 else 1
        m0 = max(n, i * n + 1 + r)  # first m with a nonzero term
        if m0 > n * n:
            break
        y = m0 - i * n - 1
        c = comb(y, r)
        for m in range(m0, n * n + 1):
            out[m - n] += sign * ci * c
            y += 1
            c = c * y // (y - r)
    return tuple(out)


def universality_ratio(n: int, t: int) -> Fraction:
    """``alpha(n, T) / beta(n, T)`` as an exact fraction."""
    if t > n * n:
        raise ValueError("T exceeds n^2")
    if t < n:
        return Fraction(0)
    cover = _cover_counts(n)
    alpha = 0
    r = t - n
    c = 1  # C(m - n, T - n) at m = T
    for m in range(t, n * n + 1):
        alpha += c * cover[m - n]
        x = m - n + 1
        c = c * x // (x - r)
    return Fraction(alpha, comb(n * n, t))


def universality_probability(n: int, sigma: int, td) -> float:
    """``(alpha/beta)^sigma`` evaluated exactly, rounded once to a float."""
    t = math.floor(n * _as_fraction(td))
    return float(universality_ratio(n, t) ** sigma)


def format_probability(x: float) -> str:
    return f"{x:.6g}"
