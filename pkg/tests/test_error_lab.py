# pylint: skip-file

import unittest
from fractions import Fraction

import numpy as np

from src.axmul import (
    HALF,
    SINGLE,
    AxFxu,
    ConfigError,
    Drad,
    Dradp,
    ErrorSample,
    InfeasibleTransitionError,
    Rad,
    Radr,
    Roup1,
    SweepSpec,
    Verdict,
    WidthError,
    calibrate_correction,
    fp_multiply_bits,
    metrics,
    metrics_from_arrays,
    metrics_from_fp,
    mred_rad_closed_form,
    pareto_front,
    red,
    red_histogram,
    run_sweep,
    sample_uniform_fixed,
    sample_uniform_fp_normal
    )
from src.axmul.approx_fixed import multiply_array
from src.axmul.error_lab import pareto_indices, red_values
from src.axmul.utils import generator

NORMAL, OVERFLOW, UNDERFLOW = Verdict.NORMAL, Verdict.OVERFLOW, Verdict.UNDERFLOW


def fixed_report(cfg, width=16, samples=200_000, seed=1):
    a, b = sample_uniform_fixed(width, samples, seed)
    return metrics_from_arrays(a * b, multiply_array(cfg, a, b, width))


def fp_report(fmt, p, r, samples=200_000, seed=1):
    a, b = sample_uniform_fp_normal(fmt, samples, seed)
    return metrics_from_fp(fp_multiply_bits(a, b, fmt), fp_multiply_bits(a, b, fmt, AxFxu(p, r)),
                           fmt)


class TestRed(unittest.TestCase):

    def test_values(self):
        self.assertEqual(red(100, 98), Fraction(1, 50))
        self.assertEqual(red(-100, -98), Fraction(1, 50))
        self.assertEqual(red(0, 0), 0)
        self.assertIsNone(red(0, 1))


class TestMetrics(unittest.TestCase):

    def test_excluded_zero(self):
        report = metrics([ErrorSample(100, 98), ErrorSample(0, 1), ErrorSample(0, 0)])
        self.assertEqual(report.count, 3)
        self.assertEqual(report.included, 2)
        self.assertEqual(report.excluded_zero, 1)
        self.assertAlmostEqual(float(report.mred), 0.01, places=9)
        self.assertEqual(report.pred(2), Fraction(1, 2))
        self.assertEqual(report.pred(5), 0)

    def test_bias_sign(self):
        report = metrics_from_arrays([100, 200], [90, 180])
        self.assertAlmostEqual(float(report.bias), -0.1, places=9)
        self.assertAlmostEqual(float(report.mred), 0.1, places=9)
        self.assertAlmostEqual(report.max_red, 0.1)

    def test_unknown_threshold(self):
        report = metrics_from_arrays([1], [1])
        with self.assertRaises(KeyError):
            report.pred(7)

    def test_empty(self):
        with self.assertRaises(ValueError):
            metrics([])
        with self.assertRaises(ValueError):
            metrics_from_arrays([], [])

    def test_verdict_mismatches(self):
        samples = [
            ErrorSample(1.0, 1.0),
            ErrorSample(2.0, float("inf"), (NORMAL, OVERFLOW)),
            ErrorSample(float("inf"), 3.0, (OVERFLOW, NORMAL)),
            ErrorSample(1e-9, 0.0, (NORMAL, UNDERFLOW)),
            ErrorSample(float("inf"), float("inf"), (OVERFLOW, OVERFLOW)),
            ErrorSample(0.0, 0.0, (UNDERFLOW, UNDERFLOW)),
        ]
        report = metrics(samples)
        self.assertEqual(report.overflow, 2)
        self.assertEqual(report.underflow, 1)
        self.assertEqual(report.pon, Fraction(2, 6))
        self.assertEqual(report.pun, Fraction(1, 6))
        self.assertEqual(report.included, 3)
        self.assertEqual(report.mred, 0)

    def test_infeasible(self):
        with self.assertRaises(InfeasibleTransitionError):
            metrics([ErrorSample(0.0, float("inf"), (UNDERFLOW, OVERFLOW))])

    def test_merge_is_order_invariant(self):
        a, b = sample_uniform_fixed(16, 30_000, seed=4)
        accurate, approx = a * b, multiply_array(Rad(8), a, b, 16)
        whole = metrics_from_arrays(accurate, approx)
        parts = [metrics_from_arrays(accurate[i:i + 7_000], approx[i:i + 7_000])
                 for i in range(0, 30_000, 7_000)]
        forward, backward = parts[0], parts[-1]
        for part in parts[1:]:
            forward = forward.merge(part)
        for part in reversed(parts[:-1]):
            backward = backward.merge(part)
        self.assertEqual(forward, whole)
        self.assertEqual(backward, whole)

    def test_merge_needs_same_thresholds(self):
        with self.assertRaises(ValueError):
            metrics_from_arrays([1], [1]).merge(metrics_from_arrays([1], [1], (1,)))

    def test_red_values(self):
        values = red_values(np.array([100, 0, 0, 50]), np.array([98, 1, 0, 50]))
        np.testing.assert_allclose(values, [0.02, 0.0, 0.0])


class TestRadClosedForm(unittest.TestCase):

    def test_published_figures(self):
        targets = {6: (0.0008, 0.0042), 8: (0.0028, 0.0169), 10: (0.0093, 0.0674)}
        for k, (mred, pred2) in targets.items():
            value, preds = mred_rad_closed_form(16, k)
            self.assertAlmostEqual(float(value), mred, delta=0.00005, msg=f"k={k}")
            self.assertAlmostEqual(float(preds[0]), pred2, delta=0.0001, msg=f"k={k}")

    def test_grows_with_k(self):
        values = [mred_rad_closed_form(16, k)[0] for k in (4, 6, 8, 10, 12)]
        self.assertEqual(values, sorted(values))

    def test_matches_sampled_products(self):
        exact, _ = mred_rad_closed_form(12, 6)
        sampled = fixed_report(Rad(6), width=12, samples=200_000).mred
        self.assertAlmostEqual(float(sampled), float(exact), delta=0.1 * float(exact))

    def test_custom_digit_map(self):
        value, preds = mred_rad_closed_form(12, 6, digit_map=lambda y, k: y)
        self.assertEqual(value, 0)
        self.assertEqual(preds, (0, 0, 0))


class TestAxFxuFigures(unittest.TestCase):

    def test_fixed_point(self):
        targets = {(1, 2): 0.0006, (2, 4): 0.0023, (3, 4): 0.0053, (3, 6): 0.0078,
                   (4, 4): 0.0155, (4, 6): 0.0176}
        for (p, r), mred in targets.items():
            value = float(fixed_report(AxFxu(p, r)).mred)
            self.assertAlmostEqual(value, mred, delta=max(0.0005, 0.2 * mred),
                                   msg=f"P={p} R={r}")

    def test_half_precision(self):
        report = fp_report(HALF, 4, 6)
        self.assertAlmostEqual(float(report.mred), 0.0333, delta=0.15 * 0.0333)
        self.assertAlmostEqual(float(report.pred(2)), 0.574, delta=0.15 * 0.574)
        self.assertAlmostEqual(float(report.pon), 0.0043, delta=0.002)
        self.assertAlmostEqual(float(report.pun), 0.0010, delta=0.002)

    def test_single_precision(self):
        report = fp_report(SINGLE, 10, 20)
        self.assertAlmostEqual(float(report.mred), 0.0220, delta=0.15 * 0.0220)
        self.assertAlmostEqual(float(report.pred(2)), 0.4486, delta=0.15 * 0.4486)
        self.assertAlmostEqual(float(report.pon), 0.0026, delta=0.002)
        self.assertAlmostEqual(float(report.pun), 0.0001, delta=0.002)

    def test_roup1_envelope(self):
        # Roup1(1, 2) cuts at column 4, the lightest truncation at P=1.
        lightest = float(fixed_report(Roup1(1, 2), samples=100_000).mred)
        self.assertAlmostEqual(lightest, 0.0004, delta=0.3 * 0.0004)
        heaviest = max(float(fixed_report(Roup1(4, r), samples=100_000).mred) for r in range(10))
        self.assertAlmostEqual(heaviest, 0.0247, delta=0.3 * 0.0247)


class TestCalibration(unittest.TestCase):

    def test_picks_smallest_bias(self):
        chosen, biases = calibrate_correction(Roup1(2, 8), samples=20_000)
        self.assertEqual(len(biases), 4)
        self.assertEqual(abs(biases[chosen]), min(abs(b) for b in biases.values()))

    def test_rejects_other_families(self):
        with self.assertRaises(ConfigError):
            calibrate_correction(AxFxu(2, 4))


class TestPareto(unittest.TestCase):

    def test_front(self):
        points = [(1, 5), (2, 3), (2, 3), (3, 4), (0.5, 10)]
        self.assertEqual(pareto_front(points), [(0.5, 10), (1, 5), (2, 3), (2, 3)])
        self.assertEqual(pareto_indices(points), [4, 0, 1, 2])

    def test_empty(self):
        self.assertEqual(pareto_front([]), [])


class TestProperties(unittest.TestCase):

    def test_rad_red_does_not_depend_on_a(self):
        rng = generator(11)
        a = rng.integers(1, 1 << 15, size=5_000, dtype=np.int64) * rng.choice([-1, 1], size=5_000)
        for b_value in (3, 77, 1234, -4097, 30001):
            b = np.full(a.shape, b_value, dtype=np.int64)
            values = red_values(a * b, multiply_array(Rad(8), a, b, 16))
            self.assertEqual(values.size, a.size)
            self.assertEqual(float(np.ptp(values)), 0.0, msg=f"B={b_value}")

    def test_pred_is_monotone_in_threshold(self):
        a, b = sample_uniform_fixed(16, 50_000, seed=6)
        thresholds = (1, 2, 3, 5, 10, 20, 50)
        for cfg in (Rad(10), AxFxu(3, 6), Roup1(2, 8)):
            report = metrics_from_arrays(a * b, multiply_array(cfg, a, b, 16), thresholds)
            preds = [report.pred(m) for m in thresholds]
            self.assertEqual(preds, sorted(preds, reverse=True), msg=str(cfg))

    def test_pareto_matches_brute_force(self):
        rng = generator(12)
        points = [tuple(row) for row in rng.integers(0, 50, size=(1000, 2)).tolist()]
        expected = [i for i, (e, c) in enumerate(points)
                    if not any(x <= e and y <= c and (x, y) != (e, c) for x, y in points)]
        self.assertEqual(sorted(pareto_indices(points)), expected)
        errors = [points[i][0] for i in pareto_indices(points)]
        self.assertEqual(errors, sorted(errors))

    def test_metrics_ignore_sample_order(self):
        a, b = sample_uniform_fixed(16, 3_000, seed=13)
        approx = multiply_array(AxFxu(2, 4), a, b, 16)
        samples = [ErrorSample(int(x), int(y)) for x, y in zip(a * b, approx)]
        shuffled = [samples[i] for i in generator(14).permutation(len(samples))]
        self.assertEqual(metrics(shuffled), metrics(samples))
        self.assertEqual(metrics(samples[::-1]), metrics(samples))

    def test_axfxu_mred_grows_with_perforation(self):
        mreds = [fixed_report(AxFxu(p, 4), samples=50_000).mred for p in range(6)]
        self.assertEqual(mreds, sorted(mreds))
        self.assertLess(mreds[0], mreds[-1])

    def test_radr_sits_between_rad_levels(self):
        lower = fixed_report(Rad(6)).mred
        upper = fixed_report(Rad(8)).mred
        for r in (6, 8):
            mred = fixed_report(Radr(6, r)).mred
            self.assertGreater(mred, lower, msg=f"R={r}")
            self.assertLess(mred, upper, msg=f"R={r}")

    def test_perforation_adds_error_to_drad(self):
        self.assertGreaterEqual(fixed_report(Dradp(8, 8)).mred, fixed_report(Drad(8, 8)).mred)


class TestSweep(unittest.TestCase):

    def test_spec_validation(self):
        with self.assertRaises(ConfigError):
            SweepSpec(configs=("acc",), sampler="gaussian")
        with self.assertRaises(ConfigError):
            SweepSpec(configs=("acc",), sampler="uniform-normal-fp")
        with self.assertRaises(ConfigError):
            SweepSpec(configs=("bogus",))
        with self.assertRaises(WidthError):
            SweepSpec(configs=("acc",), width=26, sampler="exhaustive-b").operands()

    def test_seeded_samples(self):
        first = sample_uniform_fixed(16, 1000, seed=9)
        second = sample_uniform_fixed(16, 1000, seed=9)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])
        self.assertFalse(np.array_equal(first[0], sample_uniform_fixed(16, 1000, seed=10)[0]))

    def test_threads_do_not_change_results(self):
        spec = SweepSpec(configs=("rad:k=6", "axfxu:p=2,r=4", "perf:p=3"), samples=20_000)
        single = run_sweep(spec, threads=1)
        pooled = run_sweep(spec, threads=3)
        self.assertEqual([row.report for row in single], [row.report for row in pooled])
        self.assertEqual(str(single[1].config), "axfxu:p=2,r=4")

    def test_exhaustive_b(self):
        spec = SweepSpec(configs=(Rad(6),), width=12, sampler="exhaustive-b")
        report = run_sweep(spec, threads=1)[0].report
        self.assertEqual(report.count, 4096)
        self.assertEqual(report.mred, mred_rad_closed_form(12, 6)[0])

    def test_fp_sweep(self):
        spec = SweepSpec(configs=("axfxu:p=4,r=6",), fmt=HALF, sampler="uniform-normal-fp",
                         samples=10_000)
        self.assertEqual(spec.label, "half")
        report = run_sweep(spec, threads=1)[0].report
        self.assertEqual(report.count, 10_000)


class TestHistogram(unittest.TestCase):

    def test_counts(self):
        frame = red_histogram(np.array([100, 100, 0, 200]), np.array([90, 100, 5, 190]), bins=4)
        self.assertEqual(list(frame.columns), ["red_low", "red_high", "count"])
        self.assertEqual(int(frame["count"].sum()), 3)
