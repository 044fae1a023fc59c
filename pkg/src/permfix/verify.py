"""Named verification suites: each returns a Report whose pass/fail drives the CLI exit code."""
from __future__ import annotations

import random

from . import asymptotics, cycle_core, poisson_limit
from .report import Report

SUITES = ("sieve", "sieve2", "cauchy", "oracle", "moments", "cyclelemma", "sumd")


def suite_sieve(n_max: int = 40, **_) -> Report:
    return cycle_core.verify_sieve_bounds(n_max)


def suite_sieve2(sieve2_n_max: int = 12, **_) -> Report:
    report = Report(f"short-cycle count bounds, n <= {sieve2_n_max}")
    for n in range(2, sieve2_n_max + 1):
        for m in range(1, n):
            report.extend(cycle_core.verify_sieve2(n, m))
    return report


def suite_cauchy(cauchy_n_max: int = 10, **_) -> Report:
    return cycle_core.verify_cauchy(cauchy_n_max)


def suite_oracle(oracle_n_max: int = 8, **_) -> Report:
    if oracle_n_max > cycle_core.BRUTE_FORCE_N_MAX:
        raise ValueError(f"oracle suite enumerates S_n only for n <= {cycle_core.BRUTE_FORCE_N_MAX}")
    return cycle_core.verify_oracle(oracle_n_max)


def suite_moments(samples: int = 1_000_000, seed: int = 0, workers: int | None = None,
                  moment_ks: tuple[int, ...] = (4, 16, 64), **_) -> Report:
    report = Report(f"mixed moment bound C_1 = 3, k in {list(moment_ks)}")
    for k in moment_ks:
        js = sorted({1, 2, k} & set(range(1, k + 1)))
        report.extend(poisson_limit.moment_bound_check(k, js, samples, seed, workers))
    return report


def suite_cyclelemma(instances: int = 1000, j_max: int = 10, seed: int = 0, **_) -> Report:
    rng = random.Random(seed)
    report = Report(f"cycle lemma on {instances} random instances, J <= {j_max}")
    worst = 0.0
    for _ in range(instances):
        J = rng.randint(1, j_max)
        x = asymptotics.random_unit_product(J, rng)
        dev = abs(asymptotics.cycle_lemma_average(x) - 1.0 / J)
        worst = max(worst, dev)
        if dev > 1e-12:
            report.add(f"J={J} x={x}: deviation {dev:.3g}", False)
    report.add(f"{instances} instances: max |average - 1/J| = {worst:.3g} <= 1e-12", worst <= 1e-12)
    return report


def suite_sumd(sumd_j_max: int = 4, lambda_i_max: int = 30, **_) -> Report:
    report = asymptotics.sumd_survey(sumd_j_max)
    report.extend(asymptotics.check_dyadic_lambda(lambda_i_max))
    return report


def run_suite(name: str, **budgets) -> Report:
    if name == "all":
        report = Report("all suites")
        for s in SUITES:
            report.extend(run_suite(s, **budgets))
        return report
    try:
        fn = globals()[f"suite_{name}"]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}") from None
    return fn(**budgets)
