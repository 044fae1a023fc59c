"""
The independent-Poisson cycle model X_i ~ Poisson(1/i).

``limit_i`` evaluates i(inf, k) = P(k in L(X_k)) with a dynamic program over
subset-sum masks; ``expected_L_size_exact_small`` brackets E|L(X_k)| for small k.
Also here: harmonic numbers, Bell numbers and Touchard polynomials, the
subset-sum set of a part list, and the majorant G(a) >= |L*(a)|.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .cycle_core import CycleType, SumSet, subset_sums, sumset_bits
from .report import Report

K_EXACT = 32
EXACT_SMALL_K_MAX = 8


def poisson_pmf(i: int, c: int) -> float:
    """P(X_i = c) for X_i ~ Poisson(1/i)."""
    if i < 1:
        raise ValueError(f"i must be >= 1, got {i}")
    if c < 0:
        return 0.0
    lam = 1.0 / i
    return math.exp(-lam - math.lgamma(c + 1) + c * math.log(lam))


def poisson_tail(i: int, c: int) -> float:
    """P(X_i >= c), by complement of the pmf sum."""
    if c <= 0:
        return 1.0
    return max(0.0, 1.0 - math.fsum(poisson_pmf(i, j) for j in range(c)))


@dataclass(frozen=True)
class PoissonCycleLaw:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def rates(self) -> list[float]:
        return [1.0 / i for i in range(1, self.k + 1)]

    @property
    def total_rate(self) -> float:
        return harmonic(self.k)


def harmonic(k: int) -> float:
    """h_k = 1 + 1/2 + ... + 1/k, correctly rounded."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return math.fsum(1.0 / i for i in range(1, k + 1))


def harmonic_numbers(k_max: int) -> list[float]:
    """[h_1, ..., h_{k_max}] by a Kahan-compensated running sum."""
    out = []
    total = comp = 0.0
    for i in range(1, k_max + 1):
        y = 1.0 / i - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out.append(total)
    return out


def bell_number(m: int) -> int:
    """B_m via the Bell triangle."""
    if m < 0:
        raise ValueError("m must be >= 0")
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def touchard(m: int, lam):
    """phi_m(lam) = E X^m for X ~ Poisson(lam); exact when lam is a Fraction."""
    if m < 0:
        raise ValueError("m must be >= 0")
    phis = [lam * 0 + 1]
    for j in range(m):
        phis.append(lam * sum(math.comb(j, i) * phis[i] for i in range(j + 1)))
    return phis[m]


@dataclass(frozen=True, init=False)
class PartList:
    """Non-empty multiset of positive parts, stored sorted."""

    parts: tuple[int, ...]

    def __init__(self, parts: Iterable[int]):
        parts = tuple(sorted(int(a) for a in parts))
        if not parts:
            raise ValueError("a part list needs at least one part")
        if parts[0] < 1:
            raise ValueError(f"parts must be positive: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def r(self) -> int:
        return len(self.parts)

    @property
    def total(self) -> int:
        return sum(self.parts)

    def to_cycle_type(self) -> CycleType:
        return CycleType.from_lengths(self.parts)


def _as_parts(a) -> tuple[int, ...]:
    return a.parts if isinstance(a, PartList) else PartList(a).parts


def L_star(a, cap: int | None = None) -> SumSet:
    """Subset sums {sum_{i in I} a_i : I subset [r]} truncated at cap (default: no truncation)."""
    parts = _as_parts(a)
    cap = sum(parts) if cap is None else cap
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    return SumSet(cap, sumset_bits(((p, 1) for p in parts), cap))


def G_majorant(a) -> int:
    """min over 0 <= j <= r of 2^(r-j) (a~_1 + ... + a~_j + 1), a~ sorted increasingly."""
    parts = _as_parts(a)
    r = len(parts)
    best = 1 << r
    prefix = 0
    for j, p in enumerate(parts, start=1):
        prefix += p
        best = min(best, (prefix + 1) << (r - j))
    return best


def L_size(c: CycleType) -> int:
    """|L(c)|, untruncated."""
    return len(subset_sums(c, max(c.weight, 1)))


# ---------------------------------------------------------------------------
# i(inf, k)
# ---------------------------------------------------------------------------


@dataclass
class LimitDPResult:
    k: int
    value: float
    states_per_stage: list[int] = field(default_factory=list)
    max_mass_drift: float = 0.0
    min_bit0: bool = True


def _copy_caps(k: int, extra_copies: int) -> dict[int, int]:
    return {i: -(-k // i) + extra_copies for i in range(1, k + 1)}


def limit_i_details(k: int, *, extra_copies: int = 0, extended: bool = False,
                    dps: int = 40) -> LimitDPResult:
    """Run the limit DP and return its value with bookkeeping.

    Lengths are processed from k down to 1.  Length i branches on
    X_i = 0, ..., B_i - 1 and lumps X_i >= B_i, where B_i = ceil(k/i) (+
    ``extra_copies``); further copies cannot change bits <= k.  Masks holding
    bit k are absorbing and are pooled.  Per-mask probabilities are summed with
    ``math.fsum``; ``extended`` switches to mpmath at ``dps`` digits.
    """
    if not 1 <= k <= K_EXACT:
        raise ValueError(f"limit_i is exact only for 1 <= k <= {K_EXACT}, got {k}; "
                         "use the Monte Carlo estimator estimate_limit_i instead")
    if extended:
        ctx = mpmath.mp.clone()
        ctx.dps = dps
        exp, one = ctx.exp, ctx.mpf(1)
        fsum = ctx.fsum

        def pmf(i: int, c: int):
            lam = one / i
            return exp(-lam) * lam**c / ctx.factorial(c)
    else:
        one = 1.0
        fsum = math.fsum
        pmf = poisson_pmf

    top = 1 << k
    mask_all = top * 2 - 1
    full = mask_all  # pooled absorbing state; keeps bit 0 like every other mask
    caps = _copy_caps(k, extra_copies)
    states = {1: one}
    result = LimitDPResult(k=k, value=0.0)
    for length in range(k, 0, -1):
        cap = caps[length]
        weights = [pmf(length, c) for c in range(cap)]
        weights.append(one - fsum(weights))
        pieces: dict[int, list] = defaultdict(list)
        for mask, p in states.items():
            if mask == full:
                pieces[full].append(p)
                continue
            cur = mask
            for c, w in enumerate(weights):
                if c > 0 and cur != full:
                    cur = (cur | (cur << length)) & mask_all
                    if cur & top:
                        cur = full
                pieces[cur].append(p * w)
        states = {m: fsum(ps) for m, ps in pieces.items()}
        result.states_per_stage.append(len(states))
        result.max_mass_drift = max(result.max_mass_drift, abs(float(fsum(states.values())) - 1.0))
        result.min_bit0 = result.min_bit0 and all(m & 1 for m in states)
    result.value = float(states.get(full, 0.0))
    return result


def limit_i(k: int, **kwargs) -> float:
    """i(inf, k) = P(k in L(X_k)), exact up to floating-point rounding."""
    return limit_i_details(k, **kwargs).value


# ---------------------------------------------------------------------------
# E|L(X_k)| for small k
# ---------------------------------------------------------------------------


def _tail_bound(i: int, k: int, copies: int) -> float:
    """Upper bound on E[(1 + S(X_k)) ; X_i >= copies], using independence and
    E[X 1{X >= N}] = lam P(X >= N-1)."""
    return k * poisson_tail(i, copies) + poisson_tail(i, copies - 1)


def expected_L_size_exact_small(k: int, tol: float = 1e-7) -> tuple[float, float]:
    """Two-sided bounds on E|L(X_k)| for k <= 8, with width below 1e-6.

    Each X_i is resolved exactly on 0..N_i-1.  The lower bound also credits the
    event X_i >= N_i at the value N_i (|L| is monotone).  The upper bound adds,
    for each i, E[(1 + S) ; X_i >= N_i], which dominates |L| by the inequality
    |L(X)| <= 1 + X_1 + 2X_2 + ... + k X_k.
    """
    if not 1 <= k <= EXACT_SMALL_K_MAX:
        raise ValueError(f"exact bracketing needs 1 <= k <= {EXACT_SMALL_K_MAX}, got {k}; "
                         "use the Monte Carlo estimator estimate_EL")
    per_coord = tol / k
    caps = {}
    for i in range(1, k + 1):
        n_i = 1
        while _tail_bound(i, k, n_i) > per_coord:
            n_i += 1
        caps[i] = n_i
    max_sum = sum(i * caps[i] for i in caps)
    mask_all = (1 << (max_sum + 1)) - 1

    # state: mask -> [P(lower, tail lumped), P(box only)]
    states: dict[int, tuple[float, float]] = {1: (1.0, 1.0)}
    for length in range(k, 0, -1):
        n_i = caps[length]
        box = [poisson_pmf(length, c) for c in range(n_i)]
        tail = poisson_tail(length, n_i)
        lo_pieces: dict[int, list[float]] = defaultdict(list)
        box_pieces: dict[int, list[float]] = defaultdict(list)
        for mask, (p_lo, p_box) in states.items():
            cur = mask
            for c in range(n_i + 1):
                if c > 0:
                    cur = (cur | (cur << length)) & mask_all
                if c < n_i:
                    lo_pieces[cur].append(p_lo * box[c])
                    box_pieces[cur].append(p_box * box[c])
                else:
                    lo_pieces[cur].append(p_lo * tail)
        states = {m: (math.fsum(lo_pieces[m]), math.fsum(box_pieces.get(m, ())))
                  for m in lo_pieces}
    lower = math.fsum(m.bit_count() * p for m, (p, _) in states.items())
    boxed = math.fsum(m.bit_count() * q for m, (_, q) in states.items())
    upper = boxed + math.fsum(_tail_bound(i, k, caps[i]) for i in caps)
    return lower, max(upper, lower)


def expected_L_size_closed_form(k: int) -> float:
    """E|L(X_1)| = 2 and E|L(X_2)| = 3 - 1/(2e)."""
    if k == 1:
        return 2.0
    if k == 2:
        return 3.0 - 0.5 / math.e
    raise ValueError("closed forms known only for k = 1, 2")


# ---------------------------------------------------------------------------
# exhaustive finitary checks
# ---------------------------------------------------------------------------


def check_translate_bound(max_weight: int = 12) -> Report:
    """|L(c)| <= |L(c')| prod_{i in I}(c_i + 1), c' = c with the coordinates in I zeroed."""
    from itertools import combinations

    from .cycle_core import bounded_cycle_types

    report = Report(f"translate bound, weight <= {max_weight}")
    violations = 0
    n_checked = 0
    for c in bounded_cycle_types(max_weight, max_weight):
        size = L_size(c)
        support = [i for i in range(1, len(c) + 1) if c[i] > 0]
        for r in range(len(support) + 1):
            for I in combinations(support, r):
                reduced = CycleType(0 if i in I else c[i] for i in range(1, len(c) + 1))
                bound = L_size(reduced) * math.prod(c[i] + 1 for i in I)
                n_checked += 1
                if size > bound:
                    violations += 1
                    report.add(f"c={c.counts} I={I}: |L(c)|={size} > {bound}", False)
    report.add(f"{n_checked} (c, I) pairs checked", violations == 0, f"violations={violations}")
    return report


def check_G_majorant(samples: int = 10_000, r_max: int = 12, part_max: int = 100,
                     seed: int = 0) -> Report:
    """|L*(a)| <= G(a) on random part lists."""
    import random

    rng = random.Random(seed)
    report = Report(f"G majorant on {samples} random part lists")
    violations = 0
    for _ in range(samples):
        a = PartList(rng.randint(1, part_max) for _ in range(rng.randint(1, r_max)))
        size, g = len(L_star(a)), G_majorant(a)
        if size > g:
            violations += 1
            report.add(f"a={a.parts}: |L*|={size} > G={g}", False)
    report.add(f"{samples} part lists", violations == 0, f"violations={violations}")
    return report


def moment_bound_check(k: int, js: Sequence[int], samples: int, seed: int,
                       workers: int | None = None, z: float = 4.0) -> Report:
    """Monte Carlo check of E[|L(X_k)| X_j] <= (3/j) E|L(X_k)| for each j."""
    from .sampler import estimate_moments

    js = list(js)
    if not js or len(set(js)) != len(js) or any(not 1 <= j <= k for j in js):
        raise ValueError(f"js must be distinct integers in [1, {k}], got {js}")
    res = estimate_moments(k, js, samples, seed, workers=workers)
    report = Report(f"mixed moment bound, k={k}, samples={samples}, seed={seed}")
    for j in js:
        m = res.by_j[j]
        # per-sample D = j |L| X_j - 3 |L| has mean <= 0 under the bound
        margin = -m.diff_mean
        zscore = m.diff_mean / m.diff_stderr if m.diff_stderr > 0 else (
            math.inf if m.diff_mean > 0 else -math.inf)
        ok = m.diff_mean <= z * m.diff_stderr
        report.add(
            f"k={k} j={j}: E[|L| X_j]={m.mixed:.6g} vs (3/j) E|L|={3 * res.mean_L / j:.6g}",
            ok, f"margin={margin / j:.4g} z={zscore:.2f}")
    return report


def touchard_bound_check(m_max: int = 6, lams: Iterable[Fraction] = ()) -> Report:
    """phi_m(lam) <= lam B_m for lam <= 1, exactly in rationals."""
    lams = list(lams) or [Fraction(1, i) for i in range(1, 11)]
    report = Report("Poisson moment bound lam B_m")
    for m in range(1, m_max + 1):
        b = bell_number(m)
        for lam in lams:
            val = touchard(m, lam)
            report.add(f"phi_{m}({lam}) = {val} <= {lam * b}", val <= lam * b)
    return report
