"""The exhaustive verification suites behind `torusapprox verify`.

Each suite checks one family of exact identities, proof-backed
inequalities, or regression-guarded empirical constants at full scale and
returns a CheckResult.  The pytest acceptance module and the CLI both run
these; a suite failure is a real failure, never a tolerance tweak.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .approx import (
    ApproxFunction,
    TargetSequence,
    approx_set_measure,
    build_approx_set,
    reduced_fractions,
    sumset_reduced,
)
from .arith import totient, totient_range
from .counterexample import (
    BlockSchedule,
    build_counterexample,
    divergence_partial_sum,
    instance_from_prime_blocks,
    verify_block_measure,
    verify_containment,
)
from .experiments import (
    ExperimentConfig,
    baseline_fraction,
    mc_coverage,
    pairwise_overlap_sum,
    phigcd_batch_check,
    phigcd_ratio_scan,
    quasi_independence_ladder,
    within_baseline,
)
from .overlap import (
    coprime_pair_count,
    coprime_pair_histogram,
    decompose_pair,
    overlap_bound_terms,
    sifted_interval_count,
    trivial_overlap_bound,
)
from .rationals import format_rational
from .torus import TorusIntervalSet, measure_intersection


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail}"


# -- 1: closed-form coprime pair counts vs brute force ---------------------------


def check_coprime_counts(limit: int = 60) -> CheckResult:
    pairs = 0
    for q in range(2, limit + 1):
        for r in range(1, q):
            dec = decompose_pair(q, r)
            hist = coprime_pair_histogram(dec)
            for c, brute in enumerate(hist):
                if coprime_pair_count(dec, c) != brute:
                    return CheckResult(
                        "coprime-count", False,
                        f"formula != brute force at q={q}, r={r}, c={c}",
                    )
            if sum(hist) != totient(q) * totient(r):
                return CheckResult(
                    "coprime-count", False,
                    f"mass sum mismatch at q={q}, r={r}",
                )
            pairs += 1
    return CheckResult(
        "coprime-count", True,
        f"formula == brute force on every residue for {pairs} pairs with r < q <= {limit}",
    )


# -- 2: reduced-fraction sumsets ----------------------------------------------------


def _squarefree_flags(limit: int) -> list[bool]:
    flags = [True] * (limit + 1)
    p = 2
    while p * p <= limit:
        for m in range(p * p, limit + 1, p * p):
            flags[m] = False
        p += 1
    return flags


def check_sumsets(limit: int = 2310) -> CheckResult:
    squarefree = _squarefree_flags(limit)
    checked = 0
    for q in range(1, limit + 1):
        if not squarefree[q]:
            continue
        expected = reduced_fractions(q).points
        for r in range(1, q + 1):
            if q % r != 0:
                continue
            if sumset_reduced(r, q // r) != expected:
                return CheckResult(
                    "sumset", False, f"sumset mismatch at q={q}, r={r}"
                )
            checked += 1
    return CheckResult(
        "sumset", True,
        f"{checked} (q, r) sumsets match the reduced fractions, squarefree q <= {limit}",
    )


# -- 3: exact measure law -------------------------------------------------------------


def check_measure_law(
    limit: int = 500, targets_per: int = 20, seed: int = 20260808
) -> CheckResult:
    rng = random.Random(seed)
    psis = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2))
    phi = totient_range(limit)
    checked = 0
    for q in range(1, limit + 1):
        for psi in psis:
            for _ in range(targets_per):
                y = Fraction(rng.randint(-256, 256), rng.randint(1, 64))
                report = approx_set_measure(q, psi, y)
                expected = 2 * Fraction(phi[q] * psi, q)
                if report.measure != expected or not report.ok:
                    return CheckResult(
                        "measure-law", False,
                        f"measure != 2 phi psi / q at q={q}, psi={psi}, y={y}",
                    )
                checked += 1
    return CheckResult(
        "measure-law", True,
        f"{checked} exact measure identities over q <= {limit}, psi in {{1/4, 1/3, 1/2}}",
    )


# -- 4: overlap bound soundness --------------------------------------------------------


def _bound_ratio_max(limit: int, psi: ApproxFunction) -> tuple[Fraction, Fraction]:
    """Max of exact/(addend1+addend2) and exact/trivial over r < q <= limit."""
    sets = [None] * (limit + 1)
    for q in range(1, limit + 1):
        sets[q] = build_approx_set(q, psi(q), 0)
    worst_bound = Fraction(0)
    worst_trivial = Fraction(0)
    for q in range(2, limit + 1):
        for r in range(1, q):
            exact = measure_intersection(sets[q], sets[r])
            if exact == 0:
                continue
            dec = decompose_pair(q, r)
            addend1, addend2 = overlap_bound_terms(q, r, psi, dec)
            ratio = exact / (addend1 + addend2)
            if ratio > worst_bound:
                worst_bound = ratio
            trivial = trivial_overlap_bound(q, r, psi)
            ratio = exact / trivial
            if ratio > worst_trivial:
                worst_trivial = ratio
    return worst_bound, worst_trivial


def check_overlap_bound(limit: int = 200) -> CheckResult:
    families = (ApproxFunction.constant(Fraction(1, 4)), ApproxFunction.power(Fraction(1, 2), 1))
    details = []
    for psi in families:
        worst_bound, worst_trivial = _bound_ratio_max(limit, psi)
        base = baseline_fraction("overlap_bound_C", psi.describe())
        base_trivial = baseline_fraction("trivial_bound_C", psi.describe())
        if not within_baseline(worst_bound, base):
            return CheckResult(
                "overlap-bound", False,
                f"{psi.describe()}: C = {worst_bound} exceeds baseline {base} by more than 1%",
            )
        if not within_baseline(worst_trivial, base_trivial):
            return CheckResult(
                "overlap-bound", False,
                f"{psi.describe()}: trivial C = {worst_trivial} exceeds baseline {base_trivial}",
            )
        details.append(f"{psi.describe()}: C={format_rational(worst_bound)}")
    return CheckResult(
        "overlap-bound", True,
        f"soundness over q != r <= {limit}; " + "; ".join(details),
    )


# -- 5: block construction -------------------------------------------------------------


def check_counterexample() -> CheckResult:
    expected_density = {
        6: Fraction(1, 3),
        30: Fraction(4, 15),
        210: Fraction(8, 35),
        2310: Fraction(16, 77),
    }
    built = build_counterexample(BlockSchedule(blocks=1, eps=(Fraction(1, 2),)))
    fixtures = [
        ("schedule J=1 eps=1/2", built),
        ("P=30", instance_from_prime_blocks([[2, 3, 5]])),
        ("P=210", instance_from_prime_blocks([[2, 3, 5, 7]])),
        ("P=2310", instance_from_prime_blocks([[2, 3, 5, 7, 11]])),
    ]
    if built.blocks[0].P != 6:
        return CheckResult("counterexample", False, "J=1 schedule did not produce P=6")
    for label, inst in fixtures:
        block = inst.blocks[0]
        if not verify_containment(inst, 1):
            return CheckResult("counterexample", False, f"{label}: containment failed")
        measure = verify_block_measure(inst, 1)
        expected = expected_density[block.P]
        if measure.measure != expected or measure.bound != expected or not measure.ok:
            return CheckResult(
                "counterexample", False,
                f"{label}: measure {measure.measure} != phi(P)/P = {expected}",
            )
        closed = Fraction(block.P - 1, 2 * block.P)
        if divergence_partial_sum(inst, 1) != closed:
            return CheckResult(
                "counterexample", False, f"{label}: divergence sum != (P-1)/(2P)"
            )
    return CheckResult(
        "counterexample", True,
        "containment, exact block measure phi(P)/P, and divergence sums "
        "verified for P in {6, 30, 210, 2310}",
    )


# -- 6: totient-of-gcd sums --------------------------------------------------------------


def check_phigcd(limit_equal: int = 10**4, limit_ratio: int = 10**5) -> CheckResult:
    outcome = phigcd_batch_check(limit_equal, ms=(1, 2, 3, 4))
    if not outcome["ok"]:
        return CheckResult(
            "phigcd", False,
            f"{outcome['mismatches']} brute/divisor mismatches below {limit_equal}",
        )
    ratio = phigcd_ratio_scan(limit_ratio, m=3)
    base = baseline_fraction("phigcd_m3_ratio_max")
    if not within_baseline(ratio, base):
        return CheckResult(
            "phigcd", False,
            f"m=3 ratio {ratio} exceeds baseline {base} by more than 1%",
        )
    return CheckResult(
        "phigcd", True,
        f"brute == divisor form for q <= {limit_equal}, m in 1..4; "
        f"m=3 ratio max {format_rational(ratio)} over q <= {limit_ratio}",
    )


# -- 7: sifted interval counts ---------------------------------------------------------------


def check_sifted_counts(trials: int = 10**4, seed: int = 20260808) -> CheckResult:
    rng = random.Random(seed)
    for trial in range(trials):
        n = rng.randint(1, 10**6)  # at most 7 < 8 distinct prime factors
        x = Fraction(rng.randint(-4000, 4000), rng.randint(1, 40))
        y = x + Fraction(rng.randint(0, 8000), rng.randint(1, 40))
        count, main, error = sifted_interval_count(x, y, n)
        omega = len([1 for _ in _prime_iter(n)])
        if error > 2**omega:
            return CheckResult(
                "sift", False,
                f"trial {trial}: error {error} above 2**omega(n) for n={n}",
            )
    return CheckResult(
        "sift", True,
        f"{trials} random windows: |count - main term| <= 2**omega(n) throughout",
    )


def _prime_iter(n: int):
    from .arith import factorize

    for p, _ in factorize(n):
        yield p


# -- 8: quasi-independence ladder ---------------------------------------------------------------


def check_quasi_ladder(
    ladder=(16, 32, 64, 128, 256, 512), worker_counts=(1, 4, 8)
) -> CheckResult:
    psi = ApproxFunction.divergent_m3()
    target = TargetSequence.zero(3)
    reports = quasi_independence_ladder(psi, target, m=3, ladder=ladder)
    for report in reports:
        q_max = report.config["Q"]
        base = baseline_fraction("quasi_ladder", str(q_max))
        if report.ratio is None or not within_baseline(report.ratio, base):
            return CheckResult(
                "ladder", False,
                f"Q={q_max}: ratio {report.ratio} exceeds baseline {base}",
            )
    q_top = max(ladder)
    sums = []
    for workers in worker_counts:
        cfg = ExperimentConfig(
            Q=q_top, psi=psi, target=target, m=3, workers=workers,
            exact_q_cap=max(512, q_top),
        )
        sums.append(pairwise_overlap_sum(cfg).pair_sum)
    if any(s != sums[0] for s in sums[1:]):
        return CheckResult(
            "ladder", False,
            f"pair sums differ across worker counts {worker_counts} at Q={q_top}",
        )
    top_ratio = reports[-1].ratio
    return CheckResult(
        "ladder", True,
        f"ratios bounded by baselines over Q in {tuple(ladder)}; "
        f"ratio({q_top}) ~ {float(top_ratio):.9f} (exact rational checked); "
        f"bit-identical for workers {tuple(worker_counts)}",
    )


# -- 9: Monte Carlo calibration ---------------------------------------------------------------


def _calibration_configs():
    """20 configurations whose union measures are exactly computable."""
    quarter = Fraction(1, 4)
    configs = []
    # one-dimensional, single q
    for q, psi_val, y in [
        (2, quarter, Fraction(0)),
        (3, quarter, Fraction(0)),
        (5, Fraction(1, 5), Fraction(0)),
        (7, Fraction(1, 3), Fraction(2, 7)),
        (10, Fraction(1, 2), Fraction(1, 3)),
        (12, quarter, Fraction(7, 5)),
        (1, quarter, Fraction(0)),
        (9, Fraction(2, 5), Fraction(1, 2)),
    ]:
        psi = ApproxFunction.from_table({q: psi_val})
        target = TargetSequence.constant([y], 1)
        exact = approx_set_measure(q, psi_val, y).measure
        configs.append((psi, target, 1, (q,), exact))
    # one-dimensional, several q (exact union measure)
    for qs, psi_val in [((2, 3), quarter), ((5, 7), Fraction(1, 5)), ((2, 4, 8), quarter)]:
        psi = ApproxFunction.constant(psi_val)
        target = TargetSequence.zero(1)
        union = TorusIntervalSet.empty()
        for q in qs:
            union = union.union(build_approx_set(q, psi_val, 0))
        configs.append((psi, target, 1, qs, union.measure()))
    # the first block of the J=1 construction: union measure phi(6)/6 = 1/3
    inst = build_counterexample(BlockSchedule(blocks=1, eps=(Fraction(1, 2),)))
    psi = ApproxFunction.counterexample(inst)
    target = TargetSequence.counterexample(inst)
    configs.append((psi, target, 1, (2, 3, 6), Fraction(1, 3)))
    # higher dimensions, single q: product measure
    for q, psi_val, comps, m in [
        (3, quarter, (Fraction(0), Fraction(1, 2)), 2),
        (5, Fraction(1, 3), (Fraction(1, 7), Fraction(2, 7)), 2),
        (8, quarter, (Fraction(0), Fraction(1, 3)), 2),
        (11, Fraction(1, 2), (Fraction(0), Fraction(0)), 2),
        (2, quarter, (Fraction(0),) * 3, 3),
        (3, Fraction(1, 2), (Fraction(0), Fraction(1, 3), Fraction(2, 3)), 3),
        (7, Fraction(1, 3), (Fraction(1, 5), Fraction(2, 5), Fraction(3, 5)), 3),
        (4, Fraction(2, 5), (Fraction(1, 2), Fraction(0), Fraction(1, 4)), 3),
    ]:
        psi = ApproxFunction.from_table({q: psi_val})
        target = TargetSequence.constant(comps, m)
        exact = Fraction(1)
        for y in comps:
            exact *= approx_set_measure(q, psi_val, y).measure
        configs.append((psi, target, m, (q,), exact))
    assert len(configs) == 20
    return configs


def check_mc_calibration(samples: int = 100_000, seed: int = 7) -> CheckResult:
    inside = 0
    total = 0
    for psi, target, m, q_range, exact in _calibration_configs():
        cfg = ExperimentConfig(Q=max(q_range) + 1, psi=psi, target=target, m=m, seed=seed)
        report = mc_coverage(cfg, q_range, samples)
        lo, hi = report.wilson3s
        total += 1
        if lo <= float(exact) <= hi:
            inside += 1
    ok = inside >= 19
    return CheckResult(
        "mc", ok,
        f"exact measure inside the 3-sigma interval in {inside}/{total} "
        f"configurations at {samples} samples, seed {seed}",
    )


SUITES = {
    "coprime-count": check_coprime_counts,
    "sumset": check_sumsets,
    "measure-law": check_measure_law,
    "overlap-bound": check_overlap_bound,
    "counterexample": check_counterexample,
    "phigcd": check_phigcd,
    "sift": check_sifted_counts,
    "ladder": check_quasi_ladder,
    "mc": check_mc_calibration,
}


def run_suites(names) -> list[CheckResult]:
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
        results.append(SUITES[name]())
    return results
