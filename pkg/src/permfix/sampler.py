"""
Seeded Monte Carlo for cycle structure.

Two exact-in-distribution samplers:

* stick-breaking for a uniform permutation of S_n: the cycle through the
  smallest unplaced point has length uniform on {1, ..., remaining};
* the Poisson cycle model X_i ~ Poisson(1/i), i <= k, drawn by superposition:
  Y = X_1 + ... + X_k ~ Poisson(h_k), and each of the Y cycles independently
  has length i with probability (1/i) / h_k.

Sample number s always uses the stream ``(seed, s)``.  Estimators reduce
integer counts (or take ``math.fsum`` of stored per-sample values), so the
result is bit-identical for any number of workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba as nb
import numpy as np

from .cycle_core import CycleType
from .rng import MASK64, STATE_SIZE, RngStream, next_below, next_double, stream_init

_ONE = np.uint64(1)
_ZERO = np.uint64(0)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    stderr: float
    samples: int
    seed: int

    def z(self, target: float) -> float:
        """(estimate - target) / stderr, with 0/0 read as 0."""
        diff = self.estimate - target
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.stderr

    def within(self, target: float, sigmas: float = 4.0) -> bool:
        return abs(self.z(target)) <= sigmas


# ---------------------------------------------------------------------------
# bit-vector kernel (numba)
# ---------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _bits_reset(bits, nwords):
    for w in range(nwords):
        bits[w] = _ZERO
    bits[0] = _ONE


@nb.njit(cache=True, nogil=True)
def _bits_shift_or(bits, shift, cap, top):
    """bits |= bits << shift, truncated at bit ``cap``; ``top`` bounds the highest set bit.

    Returns the new bound on the highest set bit.
    """
    new_top = top + shift
    if new_top > cap:
        new_top = cap
    if shift > cap:
        return top
    q = shift >> 6
    r = np.uint64(shift & 63)
    hi_word = new_top >> 6
    for d in range(hi_word, q - 1, -1):
        src = d - q
        v = bits[src] << r
        if r != 0 and src > 0:
            v |= bits[src - 1] >> (np.uint64(64) - r)
        bits[d] |= v
    rem = np.uint64((cap & 63) + 1)
    cap_word = cap >> 6
    if hi_word == cap_word and rem < 64:
        bits[cap_word] &= (_ONE << rem) - _ONE
    return new_top


@nb.njit(cache=True, nogil=True, inline="always")
def _bits_test(bits, s):
    return (bits[s >> 6] >> np.uint64(s & 63)) & _ONE == _ONE


@nb.njit(cache=True, nogil=True)
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@nb.njit(cache=True, nogil=True)
def _bits_count(bits, nwords):
    total = 0
    for w in range(nwords):
        total += _popcount64(bits[w])
    return total


# ---------------------------------------------------------------------------
# samplers (numba)
# ---------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _stick_lengths(state, n, k, out):
    """Write the cycle lengths <= k of a uniform element of S_n into ``out``.

    Returns the count, or -1 if ``out`` is too small.
    """
    remaining = n
    r = 0
    while remaining > 0:
        length = next_below(state, remaining) + 1
        remaining -= length
        if length <= k:
            if r >= out.shape[0]:
                return -1
            out[r] = length
            r += 1
    return r


@nb.njit(cache=True, nogil=True)
def _poisson_inverse(state, lam):
    u = next_double(state)
    p = math.exp(-lam)
    cdf = p
    c = 0
    while u >= cdf:
        c += 1
        p *= lam / c
        if p == 0.0:
            break
        cdf += p
    return c


@nb.njit(cache=True, nogil=True)
def _draw_length(state, cum):
    """Length i in 1..k with probability (1/i)/h_k; cum[i-1] = h_i."""
    target = next_double(state) * cum[cum.shape[0] - 1]
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > target:
            hi = mid
        else:
            lo = mid + 1
    return lo + 1


@nb.njit(cache=True, nogil=True)
def _poisson_parts(state, cum, out):
    """Cycle lengths of the Poisson model (unordered); -1 if ``out`` is too small."""
    y = _poisson_inverse(state, cum[cum.shape[0] - 1])
    if y > out.shape[0]:
        return -1 - y
    for j in range(y):
        out[j] = _draw_length(state, cum)
    return y


@nb.njit(cache=True, nogil=True)
def _count_fixing(n, k, seed, start, stop):
    state = np.empty(STATE_SIZE, np.uint64)
    nwords = (k >> 6) + 1
    bits = np.empty(nwords, np.uint64)
    hits = 0
    for s in range(start, stop):
        stream_init(state, seed, np.uint64(s))
        _bits_reset(bits, nwords)
        top = 0
        remaining = n
        while remaining > 0:
            length = next_below(state, remaining) + 1
            remaining -= length
            if length <= k:
                top = _bits_shift_or(bits, length, k, top)
                if _bits_test(bits, k):
                    hits += 1
                    break
    return hits


@nb.njit(cache=True, nogil=True)
def _count_limit(cum, seed, start, stop):
    k = cum.shape[0]
    state = np.empty(STATE_SIZE, np.uint64)
    nwords = (k >> 6) + 1
    bits = np.empty(nwords, np.uint64)
    hits = 0
    for s in range(start, stop):
        stream_init(state, seed, np.uint64(s))
        _bits_reset(bits, nwords)
        top = 0
        y = _poisson_inverse(state, cum[k - 1])
        for _ in range(y):
            length = _draw_length(state, cum)
            top = _bits_shift_or(bits, length, k, top)
            if _bits_test(bits, k):
                hits += 1
                break
    return hits


@nb.njit(cache=True, nogil=True)
def _L_sizes_and_counts(cum, js, seed, start, stop, sizes, xs):
    """Per-sample |L(X_k)| (untruncated) and X_j for the requested js."""
    k = cum.shape[0]
    state = np.empty(STATE_SIZE, np.uint64)
    parts = np.empty(64, np.int64)
    bits = np.empty(64, np.uint64)
    nj = js.shape[0]
    for s in range(start, stop):
        stream_init(state, seed, np.uint64(s))
        y = _poisson_inverse(state, cum[k - 1])
        if y > parts.shape[0]:
            parts = np.empty(2 * y, np.int64)
        total = 0
        for j in range(y):
            parts[j] = _draw_length(state, cum)
            total += parts[j]
        nwords = (total >> 6) + 1
        if nwords > bits.shape[0]:
            bits = np.empty(2 * nwords, np.uint64)
        _bits_reset(bits, nwords)
        top = 0
        for j in range(y):
            top = _bits_shift_or(bits, parts[j], total, top)
        sizes[s - start] = _bits_count(bits, nwords)
        for t in range(nj):
            c = 0
            for j in range(y):
                if parts[j] == js[t]:
                    c += 1
            xs[s - start, t] = c


@nb.njit(cache=True, nogil=True)
def _cycle_type_codes(n, seed, start, stop, out):
    """Encode sampled cycle types of S_n as sum_i c_i (n+1)^(i-1)."""
    state = np.empty(STATE_SIZE, np.uint64)
    for s in range(start, stop):
        stream_init(state, seed, np.uint64(s))
        remaining = n
        code = 0
        while remaining > 0:
            length = next_below(state, remaining) + 1
            remaining -= length
            code += (n + 1) ** (length - 1)
        out[s - start] = code


@nb.njit(cache=True, nogil=True)
def _simplex_integrand(r, log_k, seed, start, stop, out):
    """min_{0<=j<=r} 2^-j (k^xi_1 + ... + k^xi_j + 1) at sorted uniforms xi."""
    state = np.empty(STATE_SIZE, np.uint64)
    xi = np.empty(r, np.float64)
    for s in range(start, stop):
        stream_init(state, seed, np.uint64(s))
        for i in range(r):
            xi[i] = next_double(state)
        xi.sort()
        best = 1.0
        acc = 1.0
        scale = 1.0
        for j in range(r):
            acc += math.exp(xi[j] * log_k)
            scale *= 0.5
            val = scale * acc
            if val < best:
                best = val
        out[s - start] = best


# ---------------------------------------------------------------------------
# chunked execution
# ---------------------------------------------------------------------------


def _chunks(samples: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, samples))
    bounds = [samples * w // workers for w in range(workers + 1)]
    return [(bounds[w], bounds[w + 1]) for w in range(workers) if bounds[w] < bounds[w + 1]]


def _run(fn: Callable[[int, int], object], samples: int, workers: int | None) -> list:
    chunks = _chunks(samples, workers or default_workers())
    if len(chunks) == 1:
        return [fn(*chunks[0])]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def _check_samples(samples: int) -> None:
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")


def _seed64(seed: int) -> np.uint64:
    return np.uint64(int(seed) & MASK64)


def _indicator_result(hits: int, samples: int, seed: int) -> EstimatorResult:
    p = hits / samples
    return EstimatorResult(p, math.sqrt(p * (1.0 - p) / samples), samples, seed)


def _mean_stderr(total: int, total_sq: int, samples: int) -> tuple[float, float]:
    mean = total / samples
    if samples < 2:
        return mean, 0.0
    var = (samples * total_sq - total * total) / (samples * (samples - 1))
    return mean, math.sqrt(max(var, 0.0) / samples)


def harmonic_cumulative(k: int) -> np.ndarray:
    """[h_1, ..., h_k] as float64, for the length sampler."""
    return np.cumsum(1.0 / np.arange(1, k + 1, dtype=np.float64))


# ---------------------------------------------------------------------------
# public samplers
# ---------------------------------------------------------------------------


def sample_cycle_lengths_leq(n: int, k: int, rng: RngStream) -> list[int]:
    """Cycle lengths <= k, in order of discovery, of a uniform random element of S_n."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if n > 1 << 32:
        raise ValueError("n must be at most 2**32")
    size = 64
    while True:
        saved = rng.state.copy()
        out = np.empty(size, np.int64)
        r = _stick_lengths(rng.state, n, k, out)
        if r >= 0:
            return out[:r].tolist()
        rng.state[:] = saved
        size *= 4


def sample_poisson_counts(k: int, rng: RngStream) -> CycleType:
    """Independent X_i ~ Poisson(1/i) for i = 1..k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    cum = harmonic_cumulative(k)
    size = 64
    while True:
        saved = rng.state.copy()
        out = np.empty(size, np.int64)
        y = _poisson_parts(rng.state, cum, out)
        if y >= 0:
            return CycleType(np.bincount(out[:y], minlength=k + 1)[1:])
        rng.state[:] = saved
        size = -y


def cycle_type_histogram(n: int, samples: int, seed: int, workers: int | None = None) -> dict[CycleType, int]:
    """Counts of sampled cycle types of S_n (full cycle types, all lengths)."""
    _check_samples(samples)
    codes = np.empty(samples, np.int64)
    sd = _seed64(seed)

    def work(a: int, b: int) -> None:
        _cycle_type_codes(n, sd, a, b, codes[a:b])

    _run(work, samples, workers)
    values, counts = np.unique(codes, return_counts=True)
    out = {}
    for code, cnt in zip(values.tolist(), counts.tolist()):
        digits = []
        for _ in range(n):
            code, d = divmod(code, n + 1)
            digits.append(d)
        out[CycleType(digits)] = cnt
    return out


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def estimate_i(n: int, k: int, samples: int, seed: int = 0, workers: int | None = None) -> EstimatorResult:
    """Monte Carlo estimate of i(n, k) by stick-breaking."""
    if not 1 <= k <= n // 2:
        raise ValueError(f"estimate_i needs 1 <= k <= n/2, got n={n}, k={k}")
    if n > 1 << 32:
        raise ValueError("n must be at most 2**32")
    _check_samples(samples)
    sd = _seed64(seed)
    hits = sum(_run(lambda a, b: _count_fixing(n, k, sd, a, b), samples, workers))
    return _indicator_result(hits, samples, seed)


def estimate_limit_i(k: int, samples: int, seed: int = 0, workers: int | None = None) -> EstimatorResult:
    """Monte Carlo estimate of i(inf, k) = P(k in L(X_k))."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _check_samples(samples)
    cum = harmonic_cumulative(k)
    sd = _seed64(seed)
    hits = sum(_run(lambda a, b: _count_limit(cum, sd, a, b), samples, workers))
    return _indicator_result(hits, samples, seed)


def _L_samples(k: int, js: Sequence[int], samples: int, seed: int,
               workers: int | None) -> tuple[np.ndarray, np.ndarray]:
    cum = harmonic_cumulative(k)
    js_arr = np.asarray(list(js), dtype=np.int64)
    sizes = np.empty(samples, np.int64)
    xs = np.empty((samples, len(js_arr)), np.int64)
    sd = _seed64(seed)

    def work(a: int, b: int) -> None:
        _L_sizes_and_counts(cum, js_arr, sd, a, b, sizes[a:b], xs[a:b])

    _run(work, samples, workers)
    return sizes, xs


def _int_sums(values: np.ndarray) -> tuple[int, int]:
    """Exact (sum, sum of squares) in Python ints."""
    v = values.tolist()
    return sum(v), sum(x * x for x in v)


def estimate_EL(k: int, samples: int, seed: int = 0, workers: int | None = None) -> EstimatorResult:
    """Monte Carlo estimate of E|L(X_k)| with the untruncated subset-sum set."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _check_samples(samples)
    sizes, _ = _L_samples(k, [], samples, seed, workers)
    mean, se = _mean_stderr(*_int_sums(sizes), samples)
    return EstimatorResult(mean, se, samples, seed)


@dataclass(frozen=True)
class MomentEstimate:
    j: int
    mixed: float          # E[|L| X_j]
    mixed_stderr: float
    diff_mean: float      # E[j |L| X_j - 3 |L|]
    diff_stderr: float


@dataclass
class MomentResult:
    k: int
    samples: int
    seed: int
    mean_L: float
    stderr_L: float
    by_j: dict[int, MomentEstimate] = field(default_factory=dict)


def estimate_moments(k: int, js: Sequence[int], samples: int, seed: int = 0,
                     workers: int | None = None) -> MomentResult:
    """E|L(X_k)| and E[|L(X_k)| X_j] from one shared sample stream."""
    _check_samples(samples)
    js = list(js)
    sizes, xs = _L_samples(k, js, samples, seed, workers)
    mean_L, se_L = _mean_stderr(*_int_sums(sizes), samples)
    out = MomentResult(k, samples, seed, mean_L, se_L)
    for t, j in enumerate(js):
        mixed = sizes * xs[:, t]
        diff = j * mixed - 3 * sizes
        m, m_se = _mean_stderr(*_int_sums(mixed), samples)
        d, d_se = _mean_stderr(*_int_sums(diff), samples)
        out.by_j[j] = MomentEstimate(j, m, m_se, d, d_se)
    return out


def estimate_simplex_integral(r: int, k: float, samples: int, seed: int = 0,
                              workers: int | None = None) -> EstimatorResult:
    """Estimate of the integral over 0 <= xi_1 <= ... <= xi_r <= 1 of
    min_{0<=j<=r} 2^-j (k^xi_1 + ... + k^xi_j + 1).

    Sorted uniforms are uniform on the ordered simplex, whose volume is 1/r!.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0:
        return EstimatorResult(1.0, 0.0, max(samples, 1), seed)
    _check_samples(samples)
    vals = np.empty(samples, np.float64)
    sd = _seed64(seed)
    log_k = math.log(k)

    def work(a: int, b: int) -> None:
        _simplex_integrand(r, log_k, sd, a, b, vals[a:b])

    _run(work, samples, workers)
    vol = 1.0 / math.factorial(r)
    mean = math.fsum(vals.tolist()) / samples
    sq = math.fsum((vals * vals).tolist()) / samples
    var = max(sq - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return EstimatorResult(mean * vol, math.sqrt(var / samples) * vol, samples, seed)
