"""Batch experiments over many denominators.

Pairwise overlap sums against the squared measure sum (the quasi-
independence ratio), the main-term sum check, totient-of-gcd sums both by
brute force and through the divisor identity, Monte Carlo coverage with a
counter-based generator, and exact equidistribution scans.

Exact mode accumulates fractions.Fraction values; results are independent
of the worker count because rational addition is exact.  Enclosure mode
rounds every pair contribution outward to a dyadic grid of the configured
precision before summing, so partial sums stay cheap, the reported
lower/upper bounds are guaranteed, and the output is still bit-identical
for any partitioning.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .approx import ApproxFunction, TargetSequence, build_approx_set
from .arith import factorize_with_table, spf_table, totient, totient_range
from .errors import BudgetError
from .rationals import format_rational, parse_rational
from .torus import TorusIntervalSet

DEFAULT_EXACT_Q_CAP = 512

_ZERO = Fraction(0)


# -- deterministic counter-based sampling --------------------------------------

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def unit_sample(seed: int, counter: int) -> float:
    """Deterministic uniform double in [0, 1) at (seed, counter)."""
    return (_mix64((seed + counter * _GOLDEN) & _MASK64) >> 11) * 2.0**-53


# -- guaranteed enclosure accumulation ------------------------------------------


def round_down_dyadic(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(value.numerator * scale // value.denominator, scale)


def round_up_dyadic(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(-((-value.numerator * scale) // value.denominator), scale)


@dataclass
class Enclosure:
    """Sum of values rounded outward onto a dyadic grid.

    Per-term rounding makes the running sums exact integer arithmetic, so
    the enclosure does not depend on how terms were grouped.
    """

    bits: int
    lo_units: int = 0  # multiples of 2**-bits
    hi_units: int = 0

    def add(self, value: Fraction) -> None:
        scale = 1 << self.bits
        num = value.numerator * scale
        den = value.denominator
        self.lo_units += num // den
        self.hi_units += -((-num) // den)

    def merge(self, other: "Enclosure") -> None:
        if other.bits != self.bits:
            raise ValueError("cannot merge enclosures of different precision")
        self.lo_units += other.lo_units
        self.hi_units += other.hi_units

    def bounds(self) -> tuple[Fraction, Fraction]:
        scale = 1 << self.bits
        return Fraction(self.lo_units, scale), Fraction(self.hi_units, scale)


# -- configuration ----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    Q: int
    psi: ApproxFunction
    target: TargetSequence
    m: int = 1
    mode: str = "exact"  # or "enclosure"
    precision: int = 128
    workers: int = 1
    seed: int = 0
    exact_q_cap: int = DEFAULT_EXACT_Q_CAP

    def __post_init__(self):
        if self.Q < 2:
            raise ValueError("Q must be >= 2")
        if self.m < 1:
            raise ValueError("dimension must be >= 1")
        if self.target.m != self.m:
            raise ValueError(
                f"target dimension {self.target.m} does not match m={self.m}"
            )
        if self.mode not in ("exact", "enclosure"):
            raise ValueError(f"unknown accumulation mode {self.mode!r}")
        if self.mode == "enclosure" and self.precision < 64:
            raise ValueError("enclosure precision must be at least 64 bits")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def describe(self) -> dict:
        return {
            "Q": self.Q,
            "m": self.m,
            "psi": self.psi.describe(),
            "target": self.target.describe(),
            "mode": self.mode,
            "precision": self.precision if self.mode == "enclosure" else None,
            "workers": self.workers,
            "seed": self.seed,
        }


# -- pairwise overlap sums ----------------------------------------------------------


def _coordinate_sets(cfg: ExperimentConfig) -> list[tuple[TorusIntervalSet, ...] | None]:
    """sets[q] = the per-coordinate 1-d sets for q (coordinates sharing a
    target component share the object)."""
    sets: list[tuple[TorusIntervalSet, ...] | None] = [None] * (cfg.Q + 1)
    for q in range(1, cfg.Q + 1):
        psi_q = cfg.psi(q)
        components = cfg.target(q)
        cache: dict[Fraction, TorusIntervalSet] = {}
        row = []
        for y in components:
            if y not in cache:
                cache[y] = build_approx_set(q, psi_q, y)
            row.append(cache[y])
        sets[q] = tuple(row)
    return sets


def _scaled_coordinate_sets(cfg: ExperimentConfig) -> list:
    """Per coordinate: (slot, den, endpoints) with endpoints the piece
    boundaries as integers over the per-set common denominator.

    Scaling each pair of sets to their joint denominator turns the overlap
    merge into machine-integer arithmetic, which is what makes exact scans
    to Q = 512 practical.  `slot` identifies shared coordinate sets so one
    intersection serves every coordinate with the same target component.
    """
    sets = _coordinate_sets(cfg)
    scaled = [None] * (cfg.Q + 1)
    for q in range(1, cfg.Q + 1):
        seen: dict[int, tuple] = {}
        row = []
        for piece_set in sets[q]:
            entry = seen.get(id(piece_set))
            if entry is None:
                den = 1
                for lo, hi in piece_set.pieces:
                    den = den * lo.denominator // math.gcd(den, lo.denominator)
                    den = den * hi.denominator // math.gcd(den, hi.denominator)
                endpoints = []
                for lo, hi in piece_set.pieces:
                    endpoints.append(lo.numerator * (den // lo.denominator))
                    endpoints.append(hi.numerator * (den // hi.denominator))
                entry = ((q, len(seen)), den, endpoints)
                seen[id(piece_set)] = entry
            row.append(entry)
        scaled[q] = tuple(row)
    return scaled


def _overlap_scaled(da: int, ea: list, db: int, eb: list) -> tuple[int, int]:
    """Intersection measure of two scaled endpoint lists as (units, den)."""
    g = math.gcd(da, db)
    den = da // g * db
    fa = den // da
    fb = den // db
    a = [v * fa for v in ea]
    b = [v * fb for v in eb]
    i = j = 0
    na = len(a)
    nb = len(b)
    total = 0
    while i < na and j < nb:
        alo = a[i]
        blo = b[j]
        lo = alo if alo > blo else blo
        ahi = a[i + 1]
        bhi = b[j + 1]
        if ahi <= bhi:
            hi = ahi
            i += 2
        else:
            hi = bhi
            j += 2
        if hi > lo:
            total += hi - lo
    return total, den


def _pair_value(scaled, q: int, r: int, m: int, memo: dict) -> Fraction:
    value = None
    for i in range(m):
        ka, da, ea = scaled[q][i]
        kb, db, eb = scaled[r][i]
        key = (ka, kb)
        got = memo.get(key)
        if got is None:
            got = _overlap_scaled(da, ea, db, eb)
            memo[key] = got
        units, den = got
        if units == 0:
            return _ZERO
        value = Fraction(units, den) if value is None else value * Fraction(units, den)
    return value


def _pairwise_worker(payload) -> tuple[int, object]:
    cfg, worker_index, worker_count = payload
    scaled = _scaled_coordinate_sets(cfg)
    if cfg.mode == "exact":
        partial: object = Fraction(0)
        for q in range(1 + worker_index, cfg.Q, worker_count):
            row = Fraction(0)
            memo: dict = {}
            for r in range(q + 1, cfg.Q + 1):
                row += _pair_value(scaled, q, r, cfg.m, memo)
            partial += row
        return worker_index, partial
    enclosure = Enclosure(cfg.precision)
    for q in range(1 + worker_index, cfg.Q, worker_count):
        memo = {}
        for r in range(q + 1, cfg.Q + 1):
            value = _pair_value(scaled, q, r, cfg.m, memo)
            if value:
                enclosure.add(value)
    return worker_index, (enclosure.lo_units, enclosure.hi_units)


@dataclass
class SumReport:
    config: dict
    pair_sum: object  # Fraction, or (lo, hi) bounds in enclosure mode
    measure_sum: Fraction
    ratio: object  # Fraction, (lo, hi), or None when undefined
    per_q_measures: tuple = ()
    stripe_partials: tuple = ()

    def to_json_obj(self, fixture_version: str | None = None) -> dict:
        def render(value):
            if value is None:
                return None
            if isinstance(value, tuple):
                return {"lo": format_rational(value[0]), "hi": format_rational(value[1])}
            return format_rational(value)

        return {
            "config": self.config,
            "fixture_version": fixture_version or baselines_version(),
            "pair_sum": render(self.pair_sum),
            "measure_sum": format_rational(self.measure_sum),
            "ratio": render(self.ratio),
            "per_q_measures": [
                [q, format_rational(v)] for q, v in self.per_q_measures
            ],
        }


def pairwise_overlap_sum(cfg: ExperimentConfig) -> SumReport:
    """Sum of the m-dimensional overlap over all ordered pairs q != r <= Q,
    the measure sum over q <= Q, and their quasi-independence ratio
    pair_sum / measure_sum**2."""
    if cfg.mode == "exact" and cfg.Q > cfg.exact_q_cap:
        raise BudgetError(
            f"exact accumulation is capped at Q = {cfg.exact_q_cap}; "
            "use enclosure mode beyond that"
        )
    sets = _coordinate_sets(cfg)
    per_q = []
    measure_sum = Fraction(0)
    for q in range(1, cfg.Q + 1):
        value = Fraction(1)
        for piece_set in sets[q]:
            value *= piece_set.measure()
        per_q.append((q, value))
        measure_sum += value

    worker_count = min(cfg.workers, max(1, cfg.Q - 1))
    payloads = [(cfg, w, worker_count) for w in range(worker_count)]
    if worker_count == 1:
        results = [_pairwise_worker(payloads[0])]
    else:
        with ProcessPoolExecutor(max_workers=worker_count) as pool:
            results = list(pool.map(_pairwise_worker, payloads))
    results.sort(key=lambda item: item[0])

    if cfg.mode == "exact":
        half_sum = Fraction(0)
        for _, partial in results:
            half_sum += partial
        pair_sum: object = 2 * half_sum
        ratio: object = None
        if measure_sum > 0:
            ratio = pair_sum / measure_sum**2
        stripes = tuple(partial for _, partial in results)
    else:
        total = Enclosure(cfg.precision)
        for _, (lo_units, hi_units) in results:
            total.lo_units += lo_units
            total.hi_units += hi_units
        lo, hi = total.bounds()
        pair_sum = (2 * lo, 2 * hi)
        ratio = None
        if measure_sum > 0:
            ratio = (2 * lo / measure_sum**2, 2 * hi / measure_sum**2)
        stripes = tuple((lo_u, hi_u) for _, (lo_u, hi_u) in results)

    return SumReport(
        config=cfg.describe(),
        pair_sum=pair_sum,
        measure_sum=measure_sum,
        ratio=ratio,
        per_q_measures=tuple(per_q),
        stripe_partials=stripes,
    )


def quasi_independence_ladder(
    psi: ApproxFunction, target: TargetSequence, m: int, ladder, workers: int = 1
) -> list[SumReport]:
    """pairwise_overlap_sum at each Q of a ladder, exact mode."""
    reports = []
    for q_max in ladder:
        cfg = ExperimentConfig(
            Q=q_max, psi=psi, target=target, m=m, workers=workers,
            exact_q_cap=max(DEFAULT_EXACT_Q_CAP, q_max),
        )
        reports.append(pairwise_overlap_sum(cfg))
    return reports


# -- main-term sum check ---------------------------------------------------------


@dataclass(frozen=True)
class MainTermRow:
    Q: int
    m: int
    pair_sum: Fraction
    rhs: Fraction  # (sum of (phi psi / q)**m)**2
    ratio: Fraction | None


def main_term_sum_check(
    psi: ApproxFunction, m: int, ladder, strict_indicator: bool = False
) -> list[MainTermRow]:
    """Sum of M(q, r)**m over q != r <= Q against the squared normalized
    weight sum, for each Q in the ladder.

    Works directly from factorizations; no per-pair assertions, so ladders
    to Q = 512 stay cheap.
    """
    if min(ladder) < 2:
        raise ValueError("ladder values must be >= 2")
    q_top = max(ladder)
    table = spf_table(q_top)
    phi = totient_range(q_top)
    factors = [None] * (q_top + 1)
    weights = [None] * (q_top + 1)  # psi(q) * phi(q) / q
    widths = [None] * (q_top + 1)  # psi(q) / q
    for q in range(1, q_top + 1):
        factors[q] = dict(factorize_with_table(q, table))
        psi_q = psi(q)
        weights[q] = Fraction(psi_q * phi[q], q)
        widths[q] = Fraction(psi_q, q)

    rows = []
    lhs_half = Fraction(0)
    rhs_base = weights[1] ** m
    ladder_sorted = sorted(set(ladder))
    bound_index = 0
    for q in range(2, q_top + 1):
        rhs_base += weights[q] ** m
        for r in range(1, q):
            if weights[q] == 0 or weights[r] == 0:
                continue
            width_max = max(widths[q], widths[r])
            g = math.gcd(q, r)
            lcm = q * r // g
            big_d = 2 * lcm * width_max
            if big_d < 1 or (strict_indicator and big_d == 1):
                continue
            value = weights[q] * weights[r]
            fq = factors[q]
            fr = factors[r]
            for p in fq:
                if fq[p] != fr.get(p, 0) and p > big_d:
                    value *= 1 + Fraction(1, p)
            for p in fr:
                if p not in fq and p > big_d:
                    value *= 1 + Fraction(1, p)
            lhs_half += value**m
        while bound_index < len(ladder_sorted) and ladder_sorted[bound_index] == q:
            rhs = rhs_base**2
            pair_sum = 2 * lhs_half
            rows.append(
                MainTermRow(
                    Q=q, m=m, pair_sum=pair_sum, rhs=rhs,
                    ratio=pair_sum / rhs if rhs > 0 else None,
                )
            )
            bound_index += 1
    return rows


# -- totient-of-gcd sums -----------------------------------------------------------


def phigcd_sum(q: int, m: int) -> tuple[int, int]:
    """Sum over r <= q of phi(gcd(q, r))**m, brute force and via the
    divisor identity sum_{d | q} phi(d)**m phi(q/d).  Asserted equal."""
    if q < 1 or m < 1:
        raise ValueError("phigcd_sum requires q >= 1 and m >= 1")
    divisor_phis = {}
    for r in range(1, q + 1):
        g = math.gcd(q, r)
        if g not in divisor_phis:
            divisor_phis[g] = totient(g)
    brute = sum(divisor_phis[math.gcd(q, r)] ** m for r in range(1, q + 1))
    divisor_form = sum(
        divisor_phis[d] ** m * divisor_phis[q // d] for d in divisor_phis
    )
    assert brute == divisor_form
    return brute, divisor_form


def phigcd_batch_check(limit: int, ms=(1, 2, 3, 4)) -> dict:
    """Brute force vs divisor identity for every q <= limit and every m.

    Also tracks max over q of sum/phi(q)**m for m >= 3 and of sum/q**2 for
    m = 2.  Returns {"ok": bool, "mismatches": int, "max_ratios": {m: Fraction}}.
    """
    phi = totient_range(limit)
    gcd = math.gcd
    mismatches = 0
    max_ratios: dict[int, Fraction] = {}
    for q in range(1, limit + 1):
        counts: dict[int, int] = {}
        for r in range(1, q + 1):
            g = gcd(q, r)
            counts[g] = counts.get(g, 0) + 1
        for m in ms:
            brute = sum(count * phi[g] ** m for g, count in counts.items())
            divisor_form = sum(phi[d] ** m * phi[q // d] for d in counts)
            if brute != divisor_form:
                mismatches += 1
                continue
            if m >= 3:
                ratio = Fraction(brute, phi[q] ** m)
            elif m == 2:
                ratio = Fraction(brute, q * q)
            else:
                continue
            if m not in max_ratios or ratio > max_ratios[m]:
                max_ratios[m] = ratio
    return {"ok": mismatches == 0, "mismatches": mismatches, "max_ratios": max_ratios}


def phigcd_ratio_scan(limit: int, m: int = 3) -> Fraction:
    """Max over q <= limit of the divisor-form sum against phi(q)**m
    (m >= 3) or q**2 (m = 2).  Divisor form only, so it scales to 10**5."""
    if m < 2:
        raise ValueError("ratio scan needs m >= 2")
    table = spf_table(limit)
    phi = totient_range(limit)
    best = _ZERO
    for q in range(1, limit + 1):
        divisors = [1]
        for p, e in factorize_with_table(q, table):
            power = 1
            extra = []
            for _ in range(e):
                power *= p
                extra.extend(d * power for d in divisors)
            divisors.extend(extra)
        total = sum(phi[d] ** m * phi[q // d] for d in divisors)
        ratio = Fraction(total, phi[q] ** m) if m >= 3 else Fraction(total, q * q)
        if ratio > best:
            best = ratio
    return best


# -- Monte Carlo coverage -----------------------------------------------------------


def _wilson(hits: int, n: int, z: float) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class McReport:
    config: dict
    q_range: tuple[int, ...]
    samples: int
    hits: int
    estimate: float
    wilson95: tuple[float, float]
    wilson3s: tuple[float, float]
    seed: int
    mode: str

    def to_json_obj(self) -> dict:
        return {
            "config": self.config,
            "q_range": list(self.q_range),
            "samples": self.samples,
            "hits": self.hits,
            "estimate": repr(self.estimate),
            "wilson95": [repr(v) for v in self.wilson95],
            "wilson3sigma": [repr(v) for v in self.wilson3s],
            "seed": self.seed,
            "mode": self.mode,
        }


def mc_coverage(
    cfg: ExperimentConfig, q_range, samples: int, mode: str = "random"
) -> McReport:
    """Fraction of sampled points of [0,1)**m landing in the union of the
    approximation sets over q_range, via the strict hit test per coordinate.

    Deterministic for a given seed (counter-based generator).  Grid mode
    (equispaced midpoints plus offset) is one-dimensional only.
    """
    if cfg.m > 3:
        raise ValueError("Monte Carlo coverage is limited to m <= 3")
    if samples < 1000:
        raise ValueError("need at least 10**3 samples")
    if mode not in ("random", "grid"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    if mode == "grid" and cfg.m != 1:
        raise ValueError("grid sampling is one-dimensional")
    qs = tuple(sorted(set(int(q) for q in q_range)))
    if not qs or qs[0] < 1:
        raise ValueError("q_range must contain integers >= 1")
    per_q = []
    for q in qs:
        psi_q = float(cfg.psi(q))
        if psi_q == 0.0:
            continue
        targets = tuple(float(y) for y in cfg.target(q))
        per_q.append((q, psi_q, targets))
    hits = 0
    m = cfg.m
    seed = cfg.seed
    gcd = math.gcd
    floor = math.floor
    for i in range(samples):
        if mode == "grid":
            point = ((i + 0.5) / samples,)
        else:
            point = tuple(unit_sample(seed, i * m + d) for d in range(m))
        for q, psi_q, targets in per_q:
            for d in range(m):
                t = q * point[d] - targets[d]
                base = floor(t + 0.5)
                for a in (base - 1, base, base + 1):
                    if abs(t - a) < psi_q and gcd(abs(a), q) == 1:
                        break
                else:
                    break
            else:
                hits += 1
                break
    return McReport(
        config=cfg.describe(),
        q_range=qs,
        samples=samples,
        hits=hits,
        estimate=hits / samples,
        wilson95=_wilson(hits, samples, 1.959963984540054),
        wilson3s=_wilson(hits, samples, 3.0),
        seed=seed,
        mode=mode,
    )


# -- equidistribution scans -----------------------------------------------------------


@dataclass(frozen=True)
class EquidistRow:
    q: int
    window: tuple[Fraction, Fraction]
    ratio: Fraction
    deviation: Fraction  # |ratio - window length|


def equidistribution_scan(cfg: ExperimentConfig, windows) -> dict:
    """Exact per-q window ratios and the max deviation per window.

    Skips q with psi(q) = 0 (the ratio is undefined there).  Targets use
    the first coordinate; the scan is one-dimensional.
    """
    parsed = []
    for lo, hi in windows:
        lo = Fraction(lo)
        hi = Fraction(hi)
        if not (0 <= lo < hi <= 1):
            raise ValueError("windows must satisfy 0 <= lo < hi <= 1")
        parsed.append((lo, hi))
    rows: list[EquidistRow] = []
    max_dev = {window: _ZERO for window in parsed}
    for q in range(1, cfg.Q + 1):
        psi_q = cfg.psi(q)
        if psi_q == 0:
            continue
        approx = build_approx_set(q, psi_q, cfg.target(q)[0])
        total = approx.measure()
        if total == 0:
            continue
        for window in parsed:
            ratio = approx.restrict(*window).measure() / total
            deviation = abs(ratio - (window[1] - window[0]))
            rows.append(EquidistRow(q=q, window=window, ratio=ratio, deviation=deviation))
            if deviation > max_dev[window]:
                max_dev[window] = deviation
    return {"rows": rows, "max_deviation": max_dev}


# -- prime-tail threshold statistics -----------------------------------------------


def threshold_level_report(x: int, v_max: int = 8) -> list[dict]:
    """Counts of n < x at each threshold level v with the scaled ratio
    count * (v-1)! / x, the shape the level counts are bounded by."""
    from .arith import prime_tail_threshold_count

    table = spf_table(max(2, x - 1))
    rows = []
    for v in range(1, v_max + 1):
        count = prime_tail_threshold_count(x, v, table)
        rows.append(
            {
                "v": v,
                "count": count,
                "scaled": Fraction(count * math.factorial(v - 1), x),
            }
        )
    return rows


# -- regression baselines --------------------------------------------------------------


def load_baselines() -> dict:
    text = resources.files("torusapprox").joinpath("baselines.json").read_text()
    return json.loads(text)


def baselines_version() -> str:
    return load_baselines()["version"]


def baseline_fraction(*path: str) -> Fraction:
    node = load_baselines()
    for key in path:
        node = node[key]
    return parse_rational(node)


def within_baseline(observed: Fraction, baseline: Fraction) -> bool:
    """Regression rule: observed may not exceed the baseline by more than 1%."""
    return observed <= baseline * Fraction(101, 100)
