"""
Asymptotic checks at desk scale.

The envelope k^-delta (1 + log k)^-3/2, normalised Monte Carlo scans over a
geometric k-grid and log-log slope fits, the cycle lemma, the dyadic
lower-bound diagnostic, the ordered-simplex integral behind the upper bound,
and the equal-halves witness for transitive subgroups.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import mpmath
from scipy import stats

from .cycle_core import EXACT_N_MAX, bounded_cycle_types, exact_i, factorial
from .poisson_limit import L_size, L_star, harmonic
from .report import Report
from .sampler import EstimatorResult, estimate_EL, estimate_i, estimate_simplex_integral

CSV_HEADER = ("k", "n", "samples", "estimate", "stderr", "normalized")
SUMD_J_MAX = 6


def delta() -> float:
    return 1.0 - (1.0 + math.log(math.log(2.0))) / math.log(2.0)


def envelope(k: float) -> float:
    """k^-delta (1 + log k)^-3/2."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return k ** (-delta()) * (1.0 + math.log(k)) ** -1.5


def normalize(k: int, value: float, per_k: bool = False) -> float:
    """value / envelope(k); with ``per_k`` the value is first divided by k."""
    if per_k:
        value = value / k
    return value * k ** delta() * (1.0 + math.log(k)) ** 1.5


@dataclass(frozen=True)
class ScanRow:
    """One grid point.  ``n`` is None for the n = infinity (Poisson) model,
    and ``per_k`` marks rows whose estimate is E|L(X_k)| rather than a probability."""

    k: int
    n: int | None
    samples: int
    estimate: float
    stderr: float
    normalized: float
    per_k: bool = False

    @classmethod
    def from_result(cls, k: int, n: int | None, res: EstimatorResult, per_k: bool = False) -> "ScanRow":
        return cls(k, n, res.samples, res.estimate, res.stderr,
                   normalize(k, res.estimate, per_k), per_k)

    def as_csv(self) -> list[str]:
        return [str(self.k), "inf" if self.n is None else str(self.n), str(self.samples),
                repr(self.estimate), repr(self.stderr), repr(self.normalized)]

    def as_dict(self) -> dict:
        return {"k": self.k, "n": self.n, "samples": self.samples, "estimate": self.estimate,
                "stderr": self.stderr, "normalized": self.normalized}


def rows_to_csv(rows: Iterable[ScanRow], meta: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.as_csv())
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ScanRow]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"expected CSV header {','.join(CSV_HEADER)}, got {reader.fieldnames}")
    rows = []
    for rec in reader:
        n = None if rec["n"] in ("", "inf") else int(rec["n"])
        rows.append(ScanRow(int(rec["k"]), n, int(rec["samples"]), float(rec["estimate"]),
                            float(rec["stderr"]), float(rec["normalized"])))
    return rows


def geometric_grid(k_min: int, k_max: int, factor: float = 2.0) -> list[int]:
    if k_min < 1 or k_max < k_min or factor <= 1:
        raise ValueError("need 1 <= k_min <= k_max and factor > 1")
    grid, k = [], float(k_min)
    while round(k) <= k_max:
        if not grid or round(k) != grid[-1]:
            grid.append(int(round(k)))
        k *= factor
    return grid


def scan(k_grid: Sequence[int], n_ratio: int, samples: int, seed: int = 0,
         workers: int | None = None) -> list[ScanRow]:
    """Estimate i(n_ratio * k, k) on each grid point."""
    if n_ratio < 2:
        raise ValueError(f"n_ratio must be >= 2 so that k <= n/2, got {n_ratio}")
    return [ScanRow.from_result(k, n_ratio * k, estimate_i(n_ratio * k, k, samples, seed, workers))
            for k in k_grid]


def scan_EL(k_grid: Sequence[int], samples: int, seed: int = 0,
            workers: int | None = None) -> list[ScanRow]:
    """Estimate E|L(X_k)| on each grid point, normalised by k times the envelope."""
    return [ScanRow.from_result(k, None, estimate_EL(k, samples, seed, workers), per_k=True)
            for k in k_grid]


def band(rows: Sequence[ScanRow]) -> float:
    """max / min of the normalised values."""
    vals = [r.normalized for r in rows]
    return max(vals) / min(vals)


def fit_exponent(rows: Sequence[ScanRow]) -> tuple[float, float]:
    """OLS slope (and its standard error) of log(estimate) + 1.5 log(1 + log k) on log k."""
    ks = [r.k for r in rows]
    if len(rows) < 4 or len(set(ks)) != len(ks):
        raise ValueError("fit_exponent needs at least 4 rows with distinct k")
    if any(r.estimate <= 0 for r in rows):
        raise ValueError("all estimates must be positive to take logarithms")
    x = [math.log(r.k) for r in rows]
    y = [math.log(r.estimate / (r.k if r.per_k else 1)) + 1.5 * math.log1p(math.log(r.k))
         for r in rows]
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


# ---------------------------------------------------------------------------
# cycle lemma and the dyadic lower-bound diagnostic
# ---------------------------------------------------------------------------


def cycle_lemma_average(x: Sequence[float]) -> float:
    """Average over cyclic rotations of 1 / (x_1 + x_1 x_2 + ... + x_1...x_J)."""
    x = [float(v) for v in x]
    if not x or any(v <= 0 for v in x):
        raise ValueError("entries must be positive")
    if abs(math.prod(x) - 1.0) > 1e-12:
        raise ValueError(f"product of entries must be 1, got {math.prod(x)!r}")
    J = len(x)
    terms = []
    for t in range(J):
        partial, acc = 1.0, []
        for i in range(J):
            partial *= x[(t + i) % J]
            acc.append(partial)
        terms.append(1.0 / math.fsum(acc))
    return math.fsum(terms) / J


def random_unit_product(J: int, rng: random.Random) -> list[float]:
    """x_i = u_i / u_{i+1 mod J}, whose product is 1 up to rounding."""
    u = [rng.uniform(0.1, 10.0) for _ in range(J)]
    return [u[i] / u[(i + 1) % J] for i in range(J)]


@dataclass(frozen=True, init=False)
class DyadicProfile:
    """b_1..b_J: how many parts fall in each dyadic block [2^(i-1), 2^i - 1]."""

    b: tuple[int, ...]

    def __init__(self, b: Iterable[int]):
        b = tuple(int(v) for v in b)
        if not b or any(v < 0 for v in b):
            raise ValueError(f"profile needs J >= 1 non-negative entries, got {b}")
        if sum(b) != len(b):
            raise ValueError(f"profile entries must sum to J={len(b)}, got {sum(b)}")
        object.__setattr__(self, "b", b)

    @property
    def J(self) -> int:
        return len(self.b)


def dyadic_profiles(J: int) -> list[DyadicProfile]:
    """All b with b_1 + ... + b_J = J."""
    out = []
    for bars in itertools.combinations(range(2 * J - 1), J - 1):
        edges = (-1,) + bars + (2 * J - 1,)
        out.append(DyadicProfile(edges[i + 1] - edges[i] - 1 for i in range(J)))
    return out


def dyadic_block(i: int) -> range:
    return range(2 ** (i - 1), 2**i)


def dyadic_weighted_sum(b: Sequence[int]) -> Fraction:
    """Sum over d in D(b) of |L*(d)| / (d_1 ... d_r), exactly.

    D(b) takes b_i parts from block i.  Items are added one at a time, merging
    identical subset-sum masks; weights are integers scaled by the block lcms.
    """
    r = sum(b)
    if r == 0:
        return Fraction(1)
    blocks = [i for i, cnt in enumerate(b, start=1) for _ in range(cnt)]
    lcms = {i: reduce(math.lcm, dyadic_block(i), 1) for i in set(blocks)}
    states: dict[int, int] = {1: 1}
    for i in blocks:
        l = lcms[i]
        nxt: dict[int, int] = {}
        for mask, w in states.items():
            for d in dyadic_block(i):
                m2 = mask | (mask << d)
                nxt[m2] = nxt.get(m2, 0) + w * (l // d)
        states = nxt
    total = sum(mask.bit_count() * w for mask, w in states.items())
    return Fraction(total, math.prod(lcms[i] for i in blocks))


def sumd_rhs(profile: DyadicProfile) -> float:
    """(2 log 2)^J / sum_i 2^(b_1 + ... + b_i - i)."""
    J = profile.J
    prefix = list(itertools.accumulate(profile.b))
    denom = math.fsum(2.0 ** (prefix[i - 1] - i) for i in range(1, J + 1))
    return (2 * math.log(2)) ** J / denom


def sumd_ratio(profile: DyadicProfile) -> float:
    """Exact dyadic sum divided by the lower-bound shape, with no implied constant."""
    if profile.J > SUMD_J_MAX:
        raise ValueError(f"sumd_ratio enumerates D(b) only for J <= {SUMD_J_MAX}, got {profile.J}")
    return float(dyadic_weighted_sum(profile.b)) / sumd_rhs(profile)


def sumd_survey(J_max: int = 4) -> Report:
    """sumd_ratio over every profile with J <= J_max; logs (does not bound) the minimum."""
    report = Report(f"dyadic sum diagnostic, J <= {J_max}")
    worst = (math.inf, None)
    for J in range(1, J_max + 1):
        for prof in dyadic_profiles(J):
            ratio = sumd_ratio(prof)
            worst = min(worst, (ratio, prof.b), key=lambda t: t[0])
            report.add(f"b={prof.b}: ratio={ratio:.6g}", ratio > 0)
    report.notes.append(f"minimum ratio {worst[0]:.6g} at b={worst[1]}")
    return report


def dyadic_lambda(i: int, dps: int = 40) -> mpmath.mpf:
    """sum_{j = 2^(i-1)}^{2^i - 1} 1/j, via harmonic numbers in mpmath."""
    with mpmath.workdps(dps):
        return mpmath.harmonic(2**i - 1) - mpmath.harmonic(2 ** (i - 1) - 1)


def check_dyadic_lambda(i_max: int = 30) -> Report:
    report = Report(f"dyadic harmonic blocks, i <= {i_max}")
    with mpmath.workdps(50):
        log2 = mpmath.log(2)
        lams = [dyadic_lambda(i, 50) for i in range(1, i_max + 2)]
        for i in range(1, i_max + 1):
            lam, nxt = lams[i - 1], lams[i]
            report.add(f"lambda_{i} = {mpmath.nstr(lam, 12)} >= log 2 and >= lambda_{i + 1}",
                       lam >= log2 and lam >= nxt)
    return report


# exact re-summations of the |L| series, for identity checks


def cycle_type_series(k: int, r: int) -> Fraction:
    """sum over c on lengths <= k with c_1 + ... + c_k = r of |L(c)| / prod c_i! i^c_i."""
    total = Fraction(0)
    for c in bounded_cycle_types(k, r * k):
        if c.num_cycles == r:
            total += Fraction(L_size(c), c.automorphism_weight())
    return total


def ordered_parts_series(k: int, r: int) -> Fraction:
    """(1/r!) sum over a in [k]^r of |L*(a)| / (a_1 ... a_r)."""
    if r == 0:
        return Fraction(1)
    total = Fraction(0)
    for a in itertools.product(range(1, k + 1), repeat=r):
        total += Fraction(len(L_star(a)), math.prod(a))
    return total / factorial(r)


def dyadic_series(J: int, r: int) -> Fraction:
    """sum over b_1 + ... + b_J = r of (1 / prod b_i!) * dyadic_weighted_sum(b)."""
    total = Fraction(0)
    for b in itertools.product(range(r + 1), repeat=J):
        if sum(b) == r:
            total += dyadic_weighted_sum(b) / math.prod(factorial(v) for v in b)
    return total


# ---------------------------------------------------------------------------
# ordered-simplex integral for the upper bound
# ---------------------------------------------------------------------------


def upper_integrand_mc(r: int, k: float, samples: int, seed: int = 0,
                       workers: int | None = None, base: float | None = None) -> EstimatorResult:
    """Estimate of the integral over 0 <= xi_1 <= ... <= xi_r <= 1 of
    min_j 2^-j (B^xi_1 + ... + B^xi_j + 1), with B = k unless ``base`` is given."""
    if r > 64:
        raise ValueError(f"r must be <= 64, got {r}")
    return estimate_simplex_integral(r, k if base is None else base, samples, seed, workers)


@dataclass
class UpperSeries:
    k: int
    value: float
    stderr: float
    terms: list[float] = field(default_factory=list)


def upper_series(k: int, samples: int, seed: int = 0, workers: int | None = None,
                 rigorous: bool = False, r_max: int | None = None) -> UpperSeries:
    """sum_r (2 h_k)^r U_r scaled by 1/k (or, if ``rigorous``, e^-h_k with U_r
    taken at base e^h_k, which makes the sum a genuine upper bound on E|L(X_k)|)."""
    h = harmonic(k)
    r_max = max(1, math.floor(10 * math.log2(k))) if r_max is None else r_max
    base = math.exp(h) if rigorous else float(k)
    pref = math.exp(-h) if rigorous else 1.0 / k
    terms, var = [], 0.0
    for r in range(0, min(r_max, 64) + 1):
        res = upper_integrand_mc(r, k, samples, seed + r, workers, base=base)
        scale = pref * (2 * h) ** r
        terms.append(scale * res.estimate)
        var += (scale * res.stderr) ** 2
    return UpperSeries(k, math.fsum(terms), math.sqrt(var), terms)


# ---------------------------------------------------------------------------
# transitive subgroups from equal-halves partitions
# ---------------------------------------------------------------------------


def count_preserving_halves(n: int) -> tuple[int, int]:
    """(#pi fixing some n/2-set, #pi mapping some n/2-set B to B or its complement)."""
    if n % 2 or n > 8:
        raise ValueError("brute-force halves count needs even n <= 8")
    full = (1 << n) - 1
    halves = [sum(1 << i for i in B) for B in itertools.combinations(range(n), n // 2)]
    fixing = preserving = 0
    for perm in itertools.permutations(range(n)):
        fixes = swaps = False
        for B in halves:
            img = 0
            for i in range(n):
                if B >> i & 1:
                    img |= 1 << perm[i]
            if img == B:
                fixes = True
                break
            if img == full ^ B:
                swaps = True
        fixing += fixes
        preserving += fixes or swaps
    return fixing, preserving


@dataclass
class TransitiveDemo:
    n: int
    i_half: float
    exact: Fraction | None
    stderr: float
    normalized: float
    report: Report


def transitive_lower_demo(n: int, samples: int = 200_000, seed: int = 0,
                          workers: int | None = None) -> TransitiveDemo:
    """i(n, n/2), a lower bound on the proportion of S_n lying in a transitive
    subgroup other than A_n or S_n (the stabiliser of an equal-halves partition)."""
    if n % 2 or n <= 2:
        raise ValueError(f"n must be even and greater than 2, got {n}")
    report = Report(f"equal-halves witness, n={n}")
    if n <= EXACT_N_MAX:
        exact = exact_i(n, n // 2)
        value, se = float(exact), 0.0
    else:
        exact = None
        res = estimate_i(n, n // 2, samples, seed, workers)
        value, se = res.estimate, res.stderr
    report.add(f"i({n},{n // 2}) = {exact if exact is not None else value} in (0, 1]", 0 < value <= 1)
    if n <= 8:
        fixing, preserving = count_preserving_halves(n)
        report.add(f"#fixing an n/2-set = {fixing} = i * n!", exact is not None
                   and Fraction(fixing, factorial(n)) == exact)
        report.add(f"#preserving an equal-halves partition = {preserving} >= {fixing}",
                   preserving >= fixing)
    return TransitiveDemo(n, value, exact, se, normalize(n, value), report)
