import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy import integrate

import oracles
from permfix.asymptotics import (CSV_HEADER, DyadicProfile, ScanRow, band, check_dyadic_lambda,
                                 count_preserving_halves, cycle_lemma_average, cycle_type_series,
                                 delta, dyadic_lambda, dyadic_profiles, dyadic_series,
                                 dyadic_weighted_sum, envelope, fit_exponent, geometric_grid,
                                 normalize, ordered_parts_series, random_unit_product,
                                 rows_from_csv, rows_to_csv, scan, sumd_ratio, sumd_survey,
                                 transitive_lower_demo, upper_integrand_mc, upper_series)
from permfix.cycle_core import brute_force_i, exact_i
from permfix.sampler import estimate_EL


def synthetic(fn, ks=(2, 4, 8, 16, 64, 256, 1024)):
    return [ScanRow(k, 2 * k, 1, fn(k), 0.0, normalize(k, fn(k))) for k in ks]


class TestEnvelope:
    def test_delta(self):
        assert round(delta(), 5) == 0.08607
        assert 0 < delta() < 1
        assert 1 - delta() == pytest.approx((1 + math.log(math.log(2))) / math.log(2), abs=1e-16)

    def test_envelope(self):
        assert envelope(1) == 1.0
        vals = [envelope(k) for k in (1, 2, 3, 10, 100, 10**4, 10**6)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @given(st.integers(1, 10**6))
    def test_normalize_inverts_envelope(self, k):
        assert normalize(k, envelope(k)) == pytest.approx(1.0, rel=1e-14)
        assert normalize(k, k * envelope(k), per_k=True) == pytest.approx(1.0, rel=1e-14)


class TestFit:
    def test_envelope_gives_minus_delta(self):
        slope, se = fit_exponent(synthetic(envelope))
        assert abs(slope + delta()) < 1e-6 and se < 1e-6

    def test_inverse_k(self):
        slope, _ = fit_exponent(synthetic(lambda k: 1 / k * (1 + math.log(k)) ** -1.5))
        assert abs(slope + 1) < 1e-6

    def test_raw_one_over_k_is_shifted_by_log_correction(self):
        # with estimate = 1/k exactly the (1 + ln k)^1.5 term bends the line upward
        slope, _ = fit_exponent(synthetic(lambda k: 1 / k))
        assert -1 < slope < -0.5

    def test_rejects_degenerate(self):
        rows = synthetic(envelope)[:3]
        with pytest.raises(ValueError):
            fit_exponent(rows)
        with pytest.raises(ValueError):
            fit_exponent(synthetic(envelope, ks=(4, 4, 8, 16)))

    def test_per_k_rows(self):
        rows = [ScanRow(k, None, 1, k * envelope(k), 0.0, 1.0, per_k=True) for k in (2, 8, 32, 128)]
        assert abs(fit_exponent(rows)[0] + delta()) < 1e-6


class TestScanRows:
    def test_csv_round_trip(self):
        rows = [ScanRow(4, 8, 100, 0.25, 0.01, normalize(4, 0.25)),
                ScanRow(8, None, 100, 3.5, 0.1, normalize(8, 3.5, True), True)]
        text = rows_to_csv(rows, ["seed=1"])
        assert text.splitlines()[0] == "# seed=1"
        assert text.splitlines()[1] == ",".join(CSV_HEADER)
        back = rows_from_csv(text)
        assert [(r.k, r.n, r.estimate, r.stderr, r.normalized) for r in back] == \
               [(r.k, r.n, r.estimate, r.stderr, r.normalized) for r in rows]

    def test_bad_header(self):
        with pytest.raises(ValueError):
            rows_from_csv("a,b\n1,2\n")

    def test_grid(self):
        assert geometric_grid(64, 1024, 2) == [64, 128, 256, 512, 1024]
        assert geometric_grid(16, 4096, 2)[-1] == 4096
        with pytest.raises(ValueError):
            geometric_grid(4, 2)

    def test_scan_small(self):
        rows = scan([1], 2, 100_000, seed=3)
        assert rows[0].n == 2 and abs(rows[0].estimate - 0.5) < 4 * rows[0].stderr
        with pytest.raises(ValueError):
            scan([4], 1, 10)

    def test_normalized_recomputable(self):
        rows = scan([16, 32], 3, 5000, seed=1)
        for r in rows:
            assert r.normalized == pytest.approx(r.estimate / envelope(r.k), rel=1e-14)
        assert band(rows) >= 1


class TestCycleLemma:
    def test_examples(self):
        assert cycle_lemma_average([1, 1, 1]) == pytest.approx(1 / 3, abs=1e-15)
        assert cycle_lemma_average([2, 0.5]) == pytest.approx(0.5, abs=1e-15)
        assert cycle_lemma_average([2, 1, 0.5]) == pytest.approx(1 / 3, abs=1e-15)

    def test_random_instances(self):
        rng = random.Random(0)
        for _ in range(1000):
            J = rng.randint(1, 10)
            assert abs(cycle_lemma_average(random_unit_product(J, rng)) - 1 / J) <= 1e-12

    def test_rejects(self):
        with pytest.raises(ValueError):
            cycle_lemma_average([2, 2])
        with pytest.raises(ValueError):
            cycle_lemma_average([-1, -1])


class TestDyadic:
    def test_profiles(self):
        assert len(dyadic_profiles(3)) == math.comb(5, 2)
        assert all(sum(p.b) == p.J for p in dyadic_profiles(4))
        with pytest.raises(ValueError):
            DyadicProfile((1, 0, 1))

    def test_hand_values(self):
        assert dyadic_weighted_sum((2, 0)) == 3
        assert sumd_ratio(DyadicProfile((2, 0))) == pytest.approx(3 * 3 / (2 * math.log(2)) ** 2)
        assert sumd_ratio(DyadicProfile((1,))) == pytest.approx(1 / math.log(2))
        assert round(sumd_ratio(DyadicProfile((2, 0))), 2) == 4.68

    @pytest.mark.parametrize("b", [(0, 2), (1, 1), (0, 1, 2), (2, 1, 0), (1, 0, 2)])
    def test_weighted_sum_by_enumeration(self, b):
        blocks = [range(2 ** (i - 1), 2**i) for i, cnt in enumerate(b, 1) for _ in range(cnt)]
        direct = sum(Fraction(len(oracles.sums(d)), math.prod(d)) for d in itertools.product(*blocks))
        assert dyadic_weighted_sum(b) == direct

    def test_survey(self):
        rep = sumd_survey(4)
        assert rep.passed and len(rep) == sum(math.comb(2 * J - 1, J) for J in range(1, 5))
        assert any("minimum ratio 1.4427" in n for n in rep.notes)

    def test_rejects_large_J(self):
        with pytest.raises(ValueError):
            sumd_ratio(DyadicProfile((1,) * 7))

    def test_lambda(self):
        assert float(dyadic_lambda(1)) == 1.0
        assert float(dyadic_lambda(2)) == pytest.approx(1 / 2 + 1 / 3)
        assert check_dyadic_lambda(30).passed


class TestSeriesIdentities:
    @pytest.mark.parametrize("k", range(1, 7))
    def test_cycle_types_vs_ordered_parts(self, k):
        for r in range(0, 5):
            assert cycle_type_series(k, r) == ordered_parts_series(k, r)

    @pytest.mark.parametrize("J", [1, 2, 3])
    def test_dyadic_vs_ordered_parts(self, J):
        for r in range(0, 4):
            assert dyadic_series(J, r) == ordered_parts_series(2**J - 1, r)

    def test_series_sums_to_EL(self):
        # E|L(X_2)| = e^{-h_2} sum_r cycle_type_series(2, r)
        total = sum(cycle_type_series(2, r) for r in range(0, 26))
        assert float(total) * math.exp(-1.5) == pytest.approx(oracles.EL_2_closed_form(), abs=1e-12)


class TestSimplex:
    def test_r0(self):
        assert upper_integrand_mc(0, 10, 100).estimate == 1.0

    def test_r1_is_constant(self):
        # for r = 1 the j = 0 term (value 1) never loses: (k^x + 1)/2 >= 1
        res = upper_integrand_mc(1, 64, 1000)
        assert res.estimate == 1.0 and res.stderr == 0.0

    @pytest.mark.parametrize("k", [4.0, 64.0])
    def test_r2_against_quadrature(self, k):
        exact, _ = integrate.dblquad(lambda x2, x1: oracles.simplex_min_integrand([x1, x2], k),
                                     0, 1, lambda x1: x1, lambda x1: 1, epsabs=1e-10)
        res = upper_integrand_mc(2, k, 400_000, seed=1)
        assert abs(res.estimate - exact) < 4 * res.stderr + 1e-9
        assert res.estimate == pytest.approx(exact, abs=1e-3)

    def test_rejects_large_r(self):
        with pytest.raises(ValueError):
            upper_integrand_mc(65, 4, 10)

    @pytest.mark.parametrize("k", [16, 64])
    def test_upper_series_dominates_EL(self, k):
        el = estimate_EL(k, 100_000, seed=1)
        for rigorous in (False, True):
            up = upper_series(k, 5000, seed=2, rigorous=rigorous)
            assert up.value + 4 * up.stderr >= el.estimate - 4 * el.stderr


class TestTransitive:
    def test_n4(self):
        demo = transitive_lower_demo(4)
        assert demo.exact == Fraction(5, 12)
        assert count_preserving_halves(4) == (10, 16)
        assert demo.report.passed

    def test_n6(self):
        demo = transitive_lower_demo(6)
        assert demo.exact == exact_i(6, 3) == brute_force_i(6, 3)
        assert demo.report.passed

    def test_n8_brute_force(self):
        fixing, preserving = count_preserving_halves(8)
        assert Fraction(fixing, math.factorial(8)) == exact_i(8, 4)
        assert preserving >= fixing

    def test_mc_branch(self):
        demo = transitive_lower_demo(200, samples=20000, seed=1)
        assert demo.exact is None and 0 < demo.i_half < 1 and demo.stderr > 0

    @pytest.mark.parametrize("n", [2, 5])
    def test_rejects(self, n):
        with pytest.raises(ValueError):
            transitive_lower_demo(n)
