"""
Exact finite-n computations on cycle types.

Everything here is integer or rational arithmetic: subset-sum sets of cycle
types, the generalised Cauchy count, the count c(n, m) of permutations with no
cycle shorter than m, and the exact probability i(n, k) that a uniform random
permutation of n points fixes some k-set.  ``brute_force_i`` enumerates S_n
and serves as the oracle for the dynamic program in ``exact_i``.
"""
from __future__ import annotations

import itertools
import math
import threading
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .report import Report

# Largest n for which the CLI will attempt exact_i.
EXACT_N_MAX = 60
BRUTE_FORCE_N_MAX = 9


@dataclass(frozen=True, init=False)
class CycleType:
    """Cycle-length multiplicities; ``counts[i - 1]`` is the number of i-cycles."""

    counts: tuple[int, ...]

    def __init__(self, counts: Iterable[int] = ()):
        counts = tuple(int(c) for c in counts)
        if any(c < 0 for c in counts):
            raise ValueError(f"cycle counts must be non-negative: {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_lengths(cls, lengths: Iterable[int], size: int | None = None) -> "CycleType":
        lengths = list(lengths)
        if any(a < 1 for a in lengths):
            raise ValueError("cycle lengths must be positive")
        size = max(lengths, default=0) if size is None else size
        counts = [0] * size
        for a in lengths:
            counts[a - 1] += 1
        return cls(counts)

    def __getitem__(self, length: int) -> int:
        """Number of cycles of the given length (1-indexed; 0 beyond the vector)."""
        if length < 1:
            raise IndexError("cycle lengths start at 1")
        return self.counts[length - 1] if length <= len(self.counts) else 0

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def weight(self) -> int:
        """t = sum of i * c_i, the number of points covered."""
        return sum(i * c for i, c in enumerate(self.counts, start=1))

    @property
    def max_index(self) -> int:
        """Largest length present, or 1 for the all-zero vector."""
        return max((i for i, c in enumerate(self.counts, start=1) if c > 0), default=1)

    @property
    def num_cycles(self) -> int:
        return sum(self.counts)

    def lengths(self) -> list[int]:
        return [i for i, c in enumerate(self.counts, start=1) for _ in range(c)]

    def dominates(self, other: "CycleType") -> bool:
        size = max(len(self), len(other))
        return all(self[i] >= other[i] for i in range(1, size + 1))

    def automorphism_weight(self) -> int:
        """prod_i c_i! * i**c_i (the centraliser order of this cycle type)."""
        out = 1
        for i, c in enumerate(self.counts, start=1):
            out *= math.factorial(c) * i**c
        return out


@dataclass(frozen=True)
class SumSet:
    """Subset of {0, ..., cap} stored as the bits of a Python int."""

    cap: int
    bits: int

    def __contains__(self, s: int) -> bool:
        return 0 <= s <= self.cap and (self.bits >> s) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        bits, s = self.bits, 0
        while bits:
            if bits & 1:
                yield s
            bits >>= 1
            s += 1

    def __len__(self) -> int:
        return self.bits.bit_count()

    def issuperset(self, other: "SumSet") -> bool:
        return other.bits & ~self.bits == 0

    @property
    def max(self) -> int:
        return self.bits.bit_length() - 1


def _shift_or(bits: int, shift: int, copies: int, mask: int) -> int:
    """OR in translates of ``bits`` by shift * m for m = 1..copies (binary splitting)."""
    chunk = 1
    while copies > 0:
        take = min(chunk, copies)
        bits = (bits | (bits << (shift * take))) & mask
        copies -= take
        chunk <<= 1
    return bits


def sumset_bits(multiplicities: Iterable[tuple[int, int]], cap: int, start: int = 1) -> int:
    """Subset sums of a multiset given as (part, multiplicity) pairs, truncated at cap.

    This is the shared bit-vector kernel behind ``subset_sums`` and ``L_star``.
    Multiplicities above ceil(cap / part) cannot change bits <= cap and are capped.
    """
    mask = (1 << (cap + 1)) - 1
    bits = start & mask
    for part, mult in multiplicities:
        if mult <= 0 or part > cap:
            continue
        bits = _shift_or(bits, part, min(mult, -(-cap // part)), mask)
    return bits


def subset_sums(c: CycleType, cap: int) -> SumSet:
    """The set of sums m_1 + 2 m_2 + ... with 0 <= m_i <= c_i, truncated at cap."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    return SumSet(cap, sumset_bits(enumerate(c.counts, start=1), cap))


@lru_cache(maxsize=None)
def factorial(n: int) -> int:
    return math.factorial(n)


def falling_factorial(n: int, t: int) -> int:
    return math.perm(n, t)


def cauchy_count(c: CycleType, n: int) -> int:
    """Ways to choose disjoint cycles of the given type among n points."""
    t = c.weight
    if t > n:
        raise ValueError(f"cycle type covers t={t} points but n={n}")
    value = Fraction(falling_factorial(n, t), c.automorphism_weight())
    assert value.denominator == 1, "Cauchy count is always integral"
    return value.numerator


_no_short_lock = threading.Lock()
_no_short_rows: dict[int, list[int]] = {}


def _no_short_row(m: int, n: int) -> list[int]:
    """c(0..n', m) for some n' >= n; grown on demand and shared read-only."""
    with _no_short_lock:
        row = _no_short_rows.setdefault(m, [1])
        for size in range(len(row), n + 1):
            if m > size:
                row.append(0)
                continue
            fact = factorial(size)
            total = fact
            for length in range(m, size - m + 1):
                total += falling_factorial(size, length) * row[size - length]
            value, rem = divmod(total, size)
            assert rem == 0
            row.append(value)
        return row


def count_no_short_cycles(n: int, m: int) -> int:
    """c(n, m): permutations of n points with no cycle of length < m.

    Uses n c(n,m) = n! + sum_{m <= k <= n-m} n!/(n-k)! c(n-k, m), which reduces
    to c(n,m) = (n-1)! for n/2 < m <= n.  c(0, m) = 1 and c(n, m) = 0 for
    1 <= n < m.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return _no_short_row(m, n)[n]


def bounded_cycle_types(max_length: int, max_weight: int, exact_weight: bool = False) -> Iterator[CycleType]:
    """Cycle types on lengths 1..max_length with weight <= max_weight (== if exact_weight)."""
    counts = [0] * max_length

    def rec(i: int, remaining: int) -> Iterator[CycleType]:
        if i > max_length:
            if not exact_weight or remaining == 0:
                yield CycleType(counts)
            return
        for c in range(remaining // i + 1):
            counts[i - 1] = c
            yield from rec(i + 1, remaining - i * c)
        counts[i - 1] = 0

    yield from rec(1, max_weight)


def cycle_types(n: int) -> Iterator[CycleType]:
    """All cycle types of S_n."""
    return bounded_cycle_types(n, n, exact_weight=True)


def _permutations_of_type(length: int, copies: int) -> int:
    """Permutations of length*copies points made of ``copies`` cycles of ``length``."""
    return factorial(length * copies) // (factorial(copies) * length**copies)


def exact_i(n: int, k: int) -> Fraction:
    """Exact probability that a uniform permutation of n points fixes some k-set.

    Sums, over cycle types c on lengths 1..k whose subset sums reach k, the
    number of permutations having exactly those short cycles and no other cycle
    of length <= k.  States are (t, subset-sum mask truncated at k) carrying the
    integer t! / prod(c_i! i**c_i); masks containing k are collapsed into one.
    """
    if not 1 <= k <= n // 2:
        raise ValueError(f"exact_i needs 1 <= k <= n/2, got n={n}, k={k}; "
                         "use i(n, n-k) = i(n, k) for k > n/2")
    full = 1 << k
    mask_all = (1 << (k + 1)) - 1
    states: dict[tuple[int, int], int] = {(0, 1): 1}
    for length in range(k, 0, -1):
        nxt: dict[tuple[int, int], int] = defaultdict(int)
        for (t, mask), w in states.items():
            nxt[(t, mask)] += w
            new_mask = mask
            for copies in range(1, (n - t) // length + 1):
                t2 = t + copies * length
                if new_mask != full:
                    new_mask = (new_mask | (new_mask << length)) & mask_all
                    if new_mask & full:
                        new_mask = full
                ways = math.comb(t2, copies * length) * _permutations_of_type(length, copies)
                nxt[(t2, new_mask)] += w * ways
        states = nxt
    row = _no_short_row(k + 1, n)
    total = 0
    for (t, mask), w in states.items():
        if mask == full:
            total += w * math.comb(n, t) * row[n - t]
    return Fraction(total, factorial(n))


def fixed_set_probability(n: int, k: int) -> Fraction:
    """i(n, k) for any 0 <= k <= n, with i(n, 0) = i(n, n) = 1 and i(n, n-k) = i(n, k)."""
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n and n >= 1, got n={n}, k={k}")
    if k in (0, n):
        return Fraction(1)
    return exact_i(n, min(k, n - k))


def cycle_lengths_of(perm: Sequence[int]) -> list[int]:
    """Cycle lengths of a permutation given in one-line notation on 0..n-1."""
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        size, j = 0, start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            size += 1
        lengths.append(size)
    return lengths


def brute_force_i(n: int, k: int) -> Fraction:
    """i(n, k) by enumerating all n! permutations (oracle; n <= 9)."""
    if n > BRUTE_FORCE_N_MAX:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_N_MAX}, got {n}")
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    hits = 0
    mask = (1 << (k + 1)) - 1
    for perm in itertools.permutations(range(n)):
        bits = 1
        for a in cycle_lengths_of(perm):
            bits = (bits | (bits << a)) & mask
        hits += (bits >> k) & 1
    return Fraction(hits, factorial(n))


def derangements(n: int) -> int:
    """D_n via D_n = n D_{n-1} + (-1)^n."""
    d = 1
    for j in range(1, n + 1):
        d = j * d + (-1) ** j
    return d


def verify_sieve_bounds(n_max: int) -> Report:
    """Check 1/(2m) <= c(n,m)/n! <= 1/m, and equality 1/n for n/2 < m <= n."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    report = Report(f"no-short-cycle bounds, n <= {n_max}")
    for n in range(1, n_max + 1):
        fact = factorial(n)
        for m in range(1, n + 1):
            p = Fraction(count_no_short_cycles(n, m), fact)
            ok = Fraction(1, 2 * m) <= p <= Fraction(1, m)
            if 2 * m > n:
                ok = ok and p == Fraction(1, n)
            report.add(f"c({n},{m})/{n}! = {p}", ok)
    return report


def verify_sieve2(n: int, m: int) -> Report:
    """Check the two-sided bound on P(c_1(pi) = c_1, ..., c_m(pi) = c_m).

    For every (c_1..c_m) with c_1 + 2c_2 + ... + m c_m <= n - m - 1 the exact
    probability cauchy_count(c, n) c(n-t, m+1) / n! must lie between
    1/((2m+2) prod c_i! i^c_i) and 1/((m+1) prod c_i! i^c_i).
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got n={n}, m={m}")
    report = Report(f"short-cycle count bounds, n={n}, m={m}")
    fact = factorial(n)
    for c in bounded_cycle_types(m, n - m - 1):
        t = c.weight
        p = Fraction(cauchy_count(c, n) * count_no_short_cycles(n - t, m + 1), fact)
        aut = c.automorphism_weight()
        lo, hi = Fraction(1, (2 * m + 2) * aut), Fraction(1, (m + 1) * aut)
        report.add(f"n={n} m={m} c={c.counts}: P={p} in [{lo}, {hi}]", lo <= p <= hi)
    return report


def verify_cauchy(n_max: int) -> Report:
    """Sum of cauchy_count over all cycle types of S_n equals n!."""
    report = Report(f"cycle-type counts sum to n!, n <= {n_max}")
    for n in range(1, n_max + 1):
        total = sum(cauchy_count(c, n) for c in cycle_types(n))
        report.add(f"n={n}: sum={total}", total == factorial(n))
    return report


def verify_oracle(n_max: int = 8) -> Report:
    """exact_i agrees with brute-force enumeration for 2 <= n <= n_max."""
    report = Report(f"exact_i vs enumeration, n <= {n_max}")
    for n in range(2, n_max + 1):
        for k in range(1, n // 2 + 1):
            dp, bf = exact_i(n, k), brute_force_i(n, k)
            report.add(f"i({n},{k}) = {dp}", dp == bf, "" if dp == bf else f"brute force {bf}")
    return report
