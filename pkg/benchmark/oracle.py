import logging
from typing import NamedTuple

import numpy as np

from src.axmul.approx_fixed import (AxFxu, DyFxu, DyMasks, axfxu_product, dyfxu_masks,
                                    dyfxu_product)
from src.axmul.dlsb import dlsb_product, dlsb_product_straightforward, partition_product
from src.axmul.dsp_kernels import Kernel2D, conv2d, correlate_valid, winograd_conv3x3
from src.axmul.errors import MaskError
from src.axmul.fixed_core import booth_product, school_product
from src.axmul.float_mul import HALF, fp_masks, fp_multiply_bits
from src.axmul.utils import generator, signed_range


logger = logging.getLogger(__name__)

ORACLE_WIDTH = 8
PARTITION_WIDTH = 16
WINOGRAD_SIZE = 64
PARTITION_SAMPLES = 1_000_000
WINOGRAD_TOLERANCE = 1e-9


class OracleResult(NamedTuple):
    """Outcome of one oracle suite.

    Attributes:
        suite (str): Suite name.
        checked (int): Compared values.
        failures (int): Mismatching values.
    """
    suite: str
    checked: int
    failures: int

    @property
    def passed(self):
        return self.failures == 0


def _all_pairs(width):
    low, high = signed_range(width)
    values = np.arange(low, high + 1, dtype=np.int64)
    a, b = np.meshgrid(values, values, indexing="ij")
    return a.ravel(), b.ravel()


def _mismatches(expected, actual):
    return int(np.count_nonzero(np.asarray(expected) != np.asarray(actual)))


def check_fixed_core(seed=1, partition_samples=PARTITION_SAMPLES, inject_fault=False):
    """Booth and shift-and-add products against a * b, exhaustively at 8 bits."""
    a, b = _all_pairs(ORACLE_WIDTH)
    expected = a * b
    failures = (_mismatches(expected, booth_product(a, b, ORACLE_WIDTH))
                + _mismatches(expected, school_product(a, b, ORACLE_WIDTH)))
    return OracleResult("fixed_core", 2 * expected.size, failures)


def check_dlsb(seed=1, partition_samples=PARTITION_SAMPLES, inject_fault=False):
    """Both DLSB multipliers on every 8-bit core and extra bit, plus a
    seeded sample of 16-bit partitioned products."""
    a, b = _all_pairs(ORACLE_WIDTH)
    checked = failures = 0
    for extra_a in (0, 1):
        for extra_b in (0, 1):
            ea, eb = np.full_like(a, extra_a), np.full_like(b, extra_b)
            expected = (a + extra_a) * (b + extra_b)
            failures += _mismatches(expected, dlsb_product(a, ea, b, eb, ORACLE_WIDTH))
            failures += _mismatches(
                expected, dlsb_product_straightforward(a, ea, b, eb, ORACLE_WIDTH))
            checked += 2 * expected.size

    low, high = signed_range(PARTITION_WIDTH)
    rng = generator(seed)
    x = rng.integers(low, high + 1, size=partition_samples, dtype=np.int64)
    y = rng.integers(low, high + 1, size=x.size, dtype=np.int64)
    failures += _mismatches(x * y, partition_product(x, y, PARTITION_WIDTH))
    checked += x.size
    return OracleResult("dlsb", checked, failures)


def check_dyfxu(seed=1, partition_samples=PARTITION_SAMPLES, inject_fault=False):
    """Masked datapath against AxFXU for every legal (P, R) at 8 bits.

    With `inject_fault` the lowest bit of maskB is flipped, which must
    make the suite fail.
    """
    a, b = _all_pairs(ORACLE_WIDTH)
    checked = failures = 0
    for p in range(ORACLE_WIDTH // 2 - 1):
        for r in range(ORACLE_WIDTH - 1):
            masks = dyfxu_masks(p, r, ORACLE_WIDTH)
            if inject_fault:
                masks = DyMasks(masks.mask_a, masks.mask_b ^ 1, masks.round_enable)
            expected = axfxu_product(a, b, ORACLE_WIDTH, p, r)
            checked += expected.size
            try:
                actual = dyfxu_product(a, b, ORACLE_WIDTH, masks)
            except MaskError as err:
                logger.debug("P=%d R=%d: %s", p, r, err)
                failures += expected.size
                continue
            failures += _mismatches(expected, actual)
    return OracleResult("dyfxu", checked, failures)


def check_dyfpu(seed=1, partition_samples=PARTITION_SAMPLES, inject_fault=False):
    """DyFPU against AxFPU on every pair of half-precision mantissas with
    both exponents fixed at the bias, for every legal (P, R)."""
    mantissas = np.arange(1 << HALF.mantissa_bits, dtype=np.int64)
    words = (HALF.bias << HALF.mantissa_bits) | mantissas
    a, b = (grid.ravel() for grid in np.meshgrid(words, words, indexing="ij"))
    m = HALF.significand_bits
    checked = failures = 0
    for p in range((m - 1) // 2):
        for r in range(m - 1):
            masks = fp_masks(HALF, p, r)
            if inject_fault:
                masks = DyMasks(masks.mask_a, masks.mask_b ^ 1, masks.round_enable)
            expected = fp_multiply_bits(a, b, HALF, AxFxu(p, r)).bits
            checked += expected.size
            try:
                actual = fp_multiply_bits(a, b, HALF, DyFxu(*masks)).bits
            except MaskError as err:
                logger.debug("P=%d R=%d: %s", p, r, err)
                failures += expected.size
                continue
            failures += _mismatches(expected, actual)
    return OracleResult("dyfpu", checked, failures)


def check_winograd(seed=1, partition_samples=PARTITION_SAMPLES, inject_fault=False):
    """Winograd F(2x2, 3x3) within 1e-9 of direct cross-correlation, on a
    seeded 8-bit image with an integer kernel and on a real-valued image
    with a fractional kernel."""
    rng = generator(seed)
    image = rng.integers(0, 256, size=(WINOGRAD_SIZE, WINOGRAD_SIZE), dtype=np.int64)
    kernel = Kernel2D(rng.integers(-8, 9, size=(3, 3)))
    pairs = [(conv2d(image, kernel)[1:-1, 1:-1], winograd_conv3x3(image, kernel))]
    image = rng.uniform(-128.0, 128.0, size=(WINOGRAD_SIZE, WINOGRAD_SIZE))
    kernel = Kernel2D(rng.integers(-256, 257, size=(3, 3)), frac_bits=8)
    pairs.append((correlate_valid(image, kernel), winograd_conv3x3(image, kernel)))
    checked = failures = 0
    for direct, fast in pairs:
        failures += int(np.count_nonzero(np.abs(fast - direct) > WINOGRAD_TOLERANCE))
        checked += direct.size
    return OracleResult("winograd", checked, failures)


SUITES = {
    "fixed_core": check_fixed_core,
    "dlsb": check_dlsb,
    "dyfxu": check_dyfxu,
    "dyfpu": check_dyfpu,
    "winograd": check_winograd,
}


def run_suites(name, seed=1, partition_samples=PARTITION_SAMPLES, inject_fault=False):
    """Run one suite, or all of them for "all".

    Returns:
        list: OracleResult per suite run.
    """
    names = list(SUITES) if name == "all" else [name]
    results = []
    for suite in names:
        result = SUITES[suite](seed=seed, partition_samples=partition_samples,
                               inject_fault=inject_fault)
        logger.info("%s: %d checked, %d failed", suite, result.checked, result.failures)
        results.append(result)
    return results
