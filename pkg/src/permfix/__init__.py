"""Permutations fixing a k-set: exact counts, the Poisson limit, and Monte Carlo."""
from .asymptotics import (DyadicProfile, ScanRow, cycle_lemma_average, delta, envelope,
                          fit_exponent, scan, sumd_ratio, transitive_lower_demo,
                          upper_integrand_mc)
from .cycle_core import (CycleType, SumSet, brute_force_i, cauchy_count, count_no_short_cycles,
                         exact_i, subset_sums, verify_sieve2, verify_sieve_bounds)
from .poisson_limit import (G_majorant, L_star, PartList, bell_number,
                            expected_L_size_exact_small, harmonic, limit_i, moment_bound_check,
                            poisson_pmf, touchard)
from .rng import RngStream
from .sampler import (EstimatorResult, estimate_EL, estimate_i, estimate_limit_i,
                      sample_cycle_lengths_leq, sample_poisson_counts)

__version__ = "0.1.0"

__all__ = [
    "bell_number",
    "brute_force_i",
    "cauchy_count",
    "count_no_short_cycles",
    "cycle_lemma_average",
    "CycleType",
    "delta",
    "DyadicProfile",
    "envelope",
    "estimate_EL",
    "estimate_i",
    "estimate_limit_i",
    "EstimatorResult",
    "exact_i",
    "expected_L_size_exact_small",
    "fit_exponent",
    "G_majorant",
    "harmonic",
    "L_star",
    "limit_i",
    "moment_bound_check",
    "PartList",
    "poisson_pmf",
    "RngStream",
    "sample_cycle_lengths_leq",
    "sample_poisson_counts",
    "scan",
    "ScanRow",
    "subset_sums",
    "sumd_ratio",
    "SumSet",
    "touchard",
    "transitive_lower_demo",
    "upper_integrand_mc",
    "verify_sieve2",
    "verify_sieve_bounds",
]
