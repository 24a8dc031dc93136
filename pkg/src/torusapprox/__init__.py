"""Exact rational machinery for coprime approximation sets on the circle.

Interval algebra with Fraction endpoints, reduced-residue point sets,
pairwise overlap accounting with closed-form coprime pair counts, a block
construction with divergent weight sums but vanishing limsup measure, and
batch experiment drivers with deterministic parallel reduction.
"""

from .approx import (
    ApproxFunction,
    MeasureCheck,
    ReducedResidues,
    TargetSequence,
    approx_set_measure,
    build_approx_set,
    coprime_residues,
    equidistribution_ratio,
    hit_test,
    product_measure,
    reduced_fractions,
    sumset_reduced,
)
from .arith import (
    factorize,
    is_prime,
    next_prime,
    prime_tail_threshold,
    prime_tail_threshold_count,
    primes_for_epsilon,
    radical,
    radical_and_smooth_part,
    spf_table,
    totient,
    totient_range,
)
from .counterexample import (
    Block,
    BlockMeasure,
    BlockSchedule,
    CounterexampleInstance,
    block_union_set,
    build_counterexample,
    divergence_partial_sum,
    instance_from_prime_blocks,
    verify_block_measure,
    verify_containment,
)
from .errors import BudgetError, UsageError
from .experiments import (
    Enclosure,
    ExperimentConfig,
    McReport,
    SumReport,
    equidistribution_scan,
    main_term_sum_check,
    mc_coverage,
    pairwise_overlap_sum,
    phigcd_batch_check,
    phigcd_ratio_scan,
    phigcd_sum,
    quasi_independence_ladder,
)
from .overlap import (
    OverlapGeometry,
    OverlapReport,
    PairDecomposition,
    coprime_pair_count,
    coprime_pair_count_brute,
    coprime_pair_histogram,
    decompose_pair,
    main_term,
    overlap_bound_terms,
    overlap_count_bound,
    overlap_geometry,
    overlap_report,
    pair_overlap_exact,
    sifted_interval_count,
    trivial_overlap_bound,
)
from .rationals import format_rational, parse_rational
from .torus import TorusIntervalSet, measure_intersection, set_denominator_budget

__version__ = "0.1.0"
