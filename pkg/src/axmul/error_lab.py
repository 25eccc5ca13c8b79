"""
Error metrics, samplers, exhaustive evaluators and Pareto fronts.

Per-sample relative errors are quantized to RED_SCALE units and summed
as Python integers, so reports are exact under any merge order.
"""
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .approx_fixed import Radr, Roup1, multiply_array, parse_config, rad_digit_values
from .errors import ConfigError, InfeasibleTransitionError, WidthError
from .float_mul import FpFormat, Verdict, fp_multiply_bits
from .utils import as_words, check_width, default_threads, generator, low_signed


logger = logging.getLogger(__name__)

RED_SCALE = 1 << 32

DEFAULT_THRESHOLDS = (2, 5, 10)

# Widest B range the exhaustive evaluators enumerate.
EXHAUSTIVE_WIDTH = 24

SAMPLERS = ("exhaustive-b", "uniform-fixed", "uniform-normal-fp")

_INFEASIBLE = {(Verdict.UNDERFLOW, Verdict.OVERFLOW), (Verdict.OVERFLOW, Verdict.UNDERFLOW)}


def red(acc, approx):
    """Relative error distance |acc - approx| / |acc|.

    Returns:
        Fraction: The error; None when acc is 0 and approx is not, which
        leaves the relative error undefined.
    """
    if acc == approx:
        return Fraction(0)
    if acc == 0:
        return None
    return abs(Fraction(acc) - Fraction(approx)) / abs(Fraction(acc))


class ErrorSample(NamedTuple):
    """One accurate/approximate pair.

    Attributes:
        accurate (number): Accurate result.
        approximate (number): Approximate result.
        case (tuple): (accurate, approximate) verdicts of floating-point
            products; normal/normal for fixed point.
    """
    accurate: Union[int, float]
    approximate: Union[int, float]
    case: Tuple[Verdict, Verdict] = (Verdict.NORMAL, Verdict.NORMAL)


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated error metrics.

    Counts are integers and RED sums are integers of RED_SCALE units;
    `merge` adds them, so partial reports combine in any order.

    Attributes:
        thresholds (tuple): PRED thresholds M in percent.
        count (int): Samples seen.
        included (int): Samples contributing to MRED and PRED.
        red_units (int): Sum of quantized RED over included samples.
        signed_units (int): Sum of quantized signed relative error.
        pred_counts (tuple): Included samples with RED >= M% per threshold.
        overflow (int): Overflow mismatches in either direction.
        underflow (int): Underflow mismatches in either direction.
        excluded_zero (int): Accurate zero with nonzero approximation.
        max_red (float): Largest RED seen.
    """
    thresholds: Tuple[int, ...]
    count: int
    included: int
    red_units: int
    signed_units: int
    pred_counts: Tuple[int, ...]
    overflow: int = 0
    underflow: int = 0
    excluded_zero: int = 0
    max_red: float = 0.0

    @property
    def mred(self):
        if not self.included:
            return Fraction(0)
        return Fraction(self.red_units, RED_SCALE * self.included)

    @property
    def bias(self):
        """Mean signed relative error (approximate - accurate) / |accurate|."""
        if not self.included:
            return Fraction(0)
        return Fraction(self.signed_units, RED_SCALE * self.included)

    def pred(self, m):
        """Fraction of included samples with RED >= m%."""
        try:
            hits = self.pred_counts[self.thresholds.index(m)]
        except ValueError:
            raise KeyError(f"no PRED threshold {m}%") from None
        return Fraction(hits, self.included) if self.included else Fraction(0)

    @property
    def pon(self):
        return Fraction(self.overflow, self.count) if self.count else Fraction(0)

    @property
    def pun(self):
        return Fraction(self.underflow, self.count) if self.count else Fraction(0)

    def merge(self, other):
        if self.thresholds != other.thresholds:
            raise ValueError("cannot merge reports with different thresholds")
        return MetricsReport(
            thresholds=self.thresholds,
            count=self.count + other.count,
            included=self.included + other.included,
            red_units=self.red_units + other.red_units,
            signed_units=self.signed_units + other.signed_units,
            pred_counts=tuple(a + b for a, b in zip(self.pred_counts, other.pred_counts)),
            overflow=self.overflow + other.overflow,
            underflow=self.underflow + other.underflow,
            excluded_zero=self.excluded_zero + other.excluded_zero,
            max_red=max(self.max_red, other.max_red),
        )


def _units(values):
    return sum(int(u) for u in np.rint(values * RED_SCALE).tolist())


def _summarize(acc, diff, included, thresholds, overflow=0, underflow=0):
    """Build a report from float accurate values and differences.

    Samples outside `included` only count towards `count`; among the
    included ones an accurate zero with a nonzero difference is set
    aside as excluded-zero.
    """
    thresholds = tuple(thresholds)
    count = int(acc.size)
    zero = acc == 0
    excluded = included & zero & (diff != 0)
    kept = included & ~excluded
    magnitude = np.abs(acc[kept])
    delta = diff[kept]
    safe = np.where(magnitude == 0, 1.0, magnitude)
    red_values = np.where(magnitude == 0, 0.0, np.abs(delta) / safe)
    signed_values = np.where(magnitude == 0, 0.0, delta / safe)
    return MetricsReport(
        thresholds=thresholds,
        count=count,
        included=int(kept.sum()),
        red_units=_units(red_values),
        signed_units=_units(signed_values),
        pred_counts=tuple(int((red_values >= m / 100).sum()) for m in thresholds),
        overflow=int(overflow),
        underflow=int(underflow),
        excluded_zero=int(excluded.sum()),
        max_red=float(red_values.max()) if red_values.size else 0.0,
    )


def _difference(accurate, approximate):
    accurate = np.asarray(accurate)
    approximate = np.asarray(approximate)
    if accurate.dtype == object or approximate.dtype == object:
        diff = np.array([int(x) - int(y) for x, y in
                         zip(approximate.ravel().tolist(), accurate.ravel().tolist())],
                        dtype=float)
        return accurate.astype(float).ravel(), diff
    return accurate.astype(float).ravel(), (approximate - accurate).astype(float).ravel()


def metrics_from_arrays(accurate, approximate, thresholds=DEFAULT_THRESHOLDS):
    """Metrics of fixed-point result arrays.

    Raises:
        ValueError: Empty input.
    """
    acc, diff = _difference(accurate, approximate)
    if not acc.size:
        raise ValueError("metrics need at least one sample")
    return _summarize(acc, diff, np.ones(acc.shape, dtype=bool), thresholds)


def _verdict_metrics(acc, diff, acc_verdict, approx_verdict, thresholds):
    acc_verdict = np.asarray(acc_verdict)
    approx_verdict = np.asarray(approx_verdict)
    normal, over, under = (int(v) for v in (Verdict.NORMAL, Verdict.OVERFLOW, Verdict.UNDERFLOW))

    infeasible = ((acc_verdict == under) & (approx_verdict == over)
                  | (acc_verdict == over) & (approx_verdict == under))
    if infeasible.any():
        raise InfeasibleTransitionError(
            f"{int(infeasible.sum())} samples crossed between overflow and underflow")
    same = acc_verdict == approx_verdict
    overflow = ~same & ((acc_verdict == over) | (approx_verdict == over))
    underflow = ~same & ((acc_verdict == under) | (approx_verdict == under))
    diff = np.where(same & (acc_verdict != normal), 0.0, diff)
    return _summarize(acc, diff, same, thresholds, overflow.sum(), underflow.sum())


def decode_words(bits, fmt):
    """Float64 values of result words."""
    words = np.asarray(bits, dtype=np.int64).astype(fmt.uint_dtype)
    return words.view(fmt.dtype).astype(np.float64)


def metrics_from_fp(accurate, approximate, fmt, thresholds=DEFAULT_THRESHOLDS):
    """Metrics of floating-point products given as FpProducts.

    Normal/normal pairs contribute their RED, both-overflow and
    both-underflow pairs contribute RED 0, mismatched pairs count
    towards PON or PUN only.

    Raises:
        InfeasibleTransitionError: Overflow on one side met underflow on
            the other.
    """
    acc = decode_words(accurate.bits, fmt).ravel()
    if not acc.size:
        raise ValueError("metrics need at least one sample")
    # overflow words decode to infinities
    with np.errstate(invalid="ignore"):
        diff = decode_words(approximate.bits, fmt).ravel() - acc
    return _verdict_metrics(acc, diff, np.ravel(accurate.verdict),
                            np.ravel(approximate.verdict), thresholds)


def _delta(sample):
    if isinstance(sample.accurate, float) or isinstance(sample.approximate, float):
        # infinities stand in for overflowed products
        return float(sample.approximate) - float(sample.accurate)
    return float(Fraction(sample.approximate) - Fraction(sample.accurate))


def metrics(samples, thresholds=DEFAULT_THRESHOLDS):
    """Metrics of a stream of ErrorSample.

    Raises:
        ValueError: Empty stream.
        InfeasibleTransitionError: An infeasible verdict pair.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("metrics need at least one sample")
    for sample in samples:
        if tuple(sample.case) in _INFEASIBLE:
            raise InfeasibleTransitionError(f"infeasible verdict pair {sample.case}")
    acc = np.array([float(s.accurate) for s in samples])
    diff = np.array([_delta(s) for s in samples])
    acc_verdict = np.array([int(s.case[0]) for s in samples])
    approx_verdict = np.array([int(s.case[1]) for s in samples])
    return _verdict_metrics(acc, diff, acc_verdict, approx_verdict, thresholds)


# Exhaustive RAD evaluation


def _exhaustive_b(width):
    check_width(width)
    if width > EXHAUSTIVE_WIDTH:
        raise WidthError(f"exhaustive enumeration limited to {EXHAUSTIVE_WIDTH} bits")
    half = 1 << (width - 1)
    return np.arange(-half, half, dtype=np.int64)


def rad_encoded_operands(width, k, digit_map=None):
    """Every B of `width` bits with its approximately encoded B~."""
    b = _exhaustive_b(width)
    digit_map = digit_map or rad_digit_values
    y0 = low_signed(b, k)
    return b, b - y0 + np.asarray(digit_map(y0, k), dtype=np.int64)


def mred_rad_closed_form(n, k, thresholds=DEFAULT_THRESHOLDS, digit_map=None):
    """Exact RAD error metrics for uniformly distributed operands.

    RAD's RED depends on B only, so enumerating B with probability 2^-n
    each gives the exact metrics for any nonzero A.

    Args:
        n (int): Operand width.
        k (int): Radix exponent.
        thresholds (tuple, optional): PRED thresholds in percent.
        digit_map (callable, optional): Replaces the interval mapping
            y0 -> y0^; called as digit_map(y0_array, k).

    Returns:
        tuple: MRED and the PRED values, in threshold order.
    """
    report = rad_report(n, k, thresholds, digit_map)
    return report.mred, tuple(report.pred(m) for m in report.thresholds)


def rad_report(n, k, thresholds=DEFAULT_THRESHOLDS, digit_map=None):
    b, encoded = rad_encoded_operands(n, k, digit_map)
    return metrics_from_arrays(b, encoded, thresholds)


# Samplers


def sample_uniform_fixed(n, count, seed):
    """Uniform operand pairs over the full `n`-bit range.

    Returns:
        tuple: Arrays (A, B) of `count` words each.
    """
    check_width(n)
    low, high = -(1 << (n - 1)), (1 << (n - 1)) - 1
    draws = generator(seed).integers(low, high, size=(2, count), dtype=np.int64, endpoint=True)
    return as_words(draws[0], n, check=False), as_words(draws[1], n, check=False)


def sample_uniform_fp_normal(fmt, count, seed):
    """Uniform pairs over the normal numbers of `fmt` as result words.

    Sign, biased exponent in [1, 2^w - 2] and mantissa bits are drawn
    independently and uniformly.

    Returns:
        tuple: Arrays (A, B) of int64 words.
    """
    rng = generator(seed)
    words = []
    for _ in range(2):
        sign = rng.integers(0, 2, size=count, dtype=np.int64)
        exponent = rng.integers(1, fmt.max_exponent, size=count, dtype=np.int64, endpoint=True)
        mantissa = rng.integers(0, 1 << fmt.mantissa_bits, size=count, dtype=np.int64)
        words.append((sign << (fmt.total_bits - 1)) | (exponent << fmt.mantissa_bits) | mantissa)
    return words[0], words[1]


# Pareto fronts


def pareto_indices(points):
    """Indices of the non-dominated (error, cost) points, ordered by error.

    Both coordinates are minimized. Identical points do not dominate
    each other and are all kept.
    """
    order = sorted(range(len(points)), key=lambda i: (points[i][0], points[i][1]))
    front = []
    best = float("inf")
    for i in order:
        error, cost = points[i]
        if cost < best:
            front.append(i)
            best = cost
        elif front and tuple(points[front[-1]]) == (error, cost):
            front.append(i)
    return front


def pareto_front(points):
    return [points[i] for i in pareto_indices(points)]


# Sweeps


@dataclass(frozen=True)
class SweepSpec:
    """A sweep over configurations on one shared, seeded sample set.

    Attributes:
        configs (tuple): AxConfig instances.
        width (int, optional): Operand width of fixed-point sweeps.
        fmt (FpFormat, optional): Format of floating-point sweeps.
        sampler (str): One of SAMPLERS.
        samples (int): Pair count of the random samplers.
        seed (int): Generator seed.
        thresholds (tuple): PRED thresholds in percent.
    """
    configs: Tuple
    width: Optional[int] = 16
    fmt: Optional[FpFormat] = None
    sampler: str = "uniform-fixed"
    samples: int = 200_000
    seed: int = 1
    thresholds: Tuple[int, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if self.sampler == "uniform-normal-fp":
            if self.fmt is None:
                raise ConfigError("floating-point sampler needs a format")
        else:
            check_width(self.width)
        configs = tuple(parse_config(c) if isinstance(c, str) else c for c in self.configs)
        object.__setattr__(self, "configs", configs)

    @property
    def label(self):
        return str(self.fmt) if self.sampler == "uniform-normal-fp" else str(self.width)

    def operands(self):
        """The shared operand arrays (A, B) of this sweep."""
        if self.sampler == "exhaustive-b":
            b = _exhaustive_b(self.width)
            return np.ones_like(b), b
        if self.sampler == "uniform-fixed":
            return sample_uniform_fixed(self.width, self.samples, self.seed)
        return sample_uniform_fp_normal(self.fmt, self.samples, self.seed)


class SweepRow(NamedTuple):
    config: object
    report: MetricsReport


def products(cfg, spec, operands=None):
    """Accurate and approximate results of `cfg` on the sweep's operands.

    Returns:
        tuple: Integer arrays for fixed-point sweeps, FpProducts for
        floating-point ones.
    """
    a, b = operands if operands is not None else spec.operands()
    if spec.sampler == "uniform-normal-fp":
        return fp_multiply_bits(a, b, spec.fmt), fp_multiply_bits(a, b, spec.fmt, cfg)
    return a * b, multiply_array(cfg, a, b, spec.width)


def red_values(accurate, approximate, fmt=None):
    """Per-sample RED of the samples metrics would include, as floats.

    Floating-point results (FpProducts, with `fmt`) contribute their
    normal/normal pairs only.
    """
    if fmt is not None:
        both = (np.ravel(accurate.verdict) == int(Verdict.NORMAL)) & (
            np.ravel(approximate.verdict) == int(Verdict.NORMAL))
        acc = decode_words(accurate.bits, fmt).ravel()[both]
        diff = decode_words(approximate.bits, fmt).ravel()[both] - acc
    else:
        acc, diff = _difference(accurate, approximate)
    kept = (acc != 0) | (diff == 0)
    acc, diff = acc[kept], diff[kept]
    return np.where(acc == 0, 0.0, np.abs(diff) / np.where(acc == 0, 1.0, np.abs(acc)))


def report_for(accurate, approximate, spec):
    if spec.sampler == "uniform-normal-fp":
        return metrics_from_fp(accurate, approximate, spec.fmt, spec.thresholds)
    return metrics_from_arrays(accurate, approximate, spec.thresholds)


def evaluate_config(cfg, spec, operands=None):
    """MetricsReport of one configuration on the sweep's operands."""
    report = report_for(*products(cfg, spec, operands), spec)
    logger.info("%s on %s: %d samples, MRED %.4f%%", cfg, spec.label, report.count,
                100 * float(report.mred))
    return report


def run_sweep(spec, threads=None):
    """Evaluate every configuration of `spec`.

    Args:
        spec (SweepSpec): The sweep.
        threads (int, optional): Worker threads. Defaults to AXMUL_THREADS.

    Returns:
        list: SweepRow per configuration, in configuration order.
    """
    operands = spec.operands()
    threads = threads or default_threads()
    if threads == 1:
        reports = [evaluate_config(cfg, spec, operands) for cfg in spec.configs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(lambda cfg: evaluate_config(cfg, spec, operands),
                                    spec.configs))
    return [SweepRow(cfg, report) for cfg, report in zip(spec.configs, reports)]


def calibrate_correction(cfg, width=16, samples=100_000, seed=1):
    """Pick the correction placement of a ROUP1/RADR configuration.

    All four (corr, const) placements are evaluated on one seeded sample;
    the one with the smallest absolute mean signed error wins.

    Returns:
        tuple: The chosen configuration and a dict of bias per placement.
    """
    if not isinstance(cfg, (Roup1, Radr)):
        raise ConfigError(f"{cfg} has no correction placement")
    spec = SweepSpec(configs=(), width=width, samples=samples, seed=seed)
    a, b = spec.operands()
    accurate = a * b
    biases = {}
    for corr in (1, 0):
        for const in (1, 0):
            candidate = dataclasses.replace(cfg, corr=corr, const=const)
            report = metrics_from_arrays(accurate, multiply_array(candidate, a, b, width))
            biases[candidate] = report.bias
    chosen = min(biases, key=lambda c: (abs(biases[c]), -c.corr, -c.const))
    logger.info("calibrated %s: bias %.6f%%", chosen, 100 * float(biases[chosen]))
    return chosen, biases


def red_histogram(accurate, approximate, bins=50, upper=None):
    """Histogram of per-sample RED.

    Samples with an accurate zero are left out.

    Returns:
        pandas.DataFrame: Columns red_low, red_high, count.
    """
    acc, diff = _difference(accurate, approximate)
    nonzero = acc != 0
    values = np.abs(diff[nonzero]) / np.abs(acc[nonzero])
    upper = upper if upper is not None else (float(values.max()) if values.size else 1.0)
    counts, edges = np.histogram(values, bins=bins, range=(0.0, upper or 1.0))
    return pd.DataFrame({"red_low": edges[:-1], "red_high": edges[1:], "count": counts})


__all__ = [
    "RED_SCALE", "DEFAULT_THRESHOLDS", "SAMPLERS", "red", "ErrorSample", "MetricsReport",
    "metrics", "metrics_from_arrays", "metrics_from_fp", "decode_words",
    "mred_rad_closed_form", "rad_report", "rad_encoded_operands", "sample_uniform_fixed",
    "sample_uniform_fp_normal", "pareto_front", "pareto_indices", "SweepSpec", "SweepRow",
    "products", "red_values", "report_for", "evaluate_config", "run_sweep",
    "calibrate_correction", "red_histogram",
]
