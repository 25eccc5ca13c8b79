# pylint: skip-file

import math
import os
import tempfile
import unittest

import numpy as np

from src.axmul import (
    AxFxu,
    GrayImage,
    Kernel2D,
    PgmFormatError,
    Rad,
    cer,
    conv2d,
    fir,
    gaussian_blur,
    matmul_tiled,
    pgm_read,
    pgm_write,
    psnr,
    sobel,
    ssim,
    synthetic_scene,
    textured_scene,
    winograd_conv3x3
    )
from src.axmul.approx_fixed import multiply_array
from src.axmul.dsp_kernels import (
    BLUR_PRESETS,
    correlate_valid,
    hamming_sinc_taps,
    matmul_batch,
    pgm_decode,
    pgm_encode,
    pixel_shift,
    random_signal,
    random_tiles,
    tile_entry_limit
    )
from src.axmul.error_lab import metrics_from_arrays
from src.axmul.utils import generator


def checkerboard(size=32):
    rows, cols = np.indices((size, size))
    return GrayImage(np.where((rows + cols) % 2 == 0, 255, 0))


class TestConv2d(unittest.TestCase):

    def test_impulse_gives_flipped_kernel(self):
        image = np.zeros((7, 7), dtype=np.int64)
        image[3, 3] = 1
        kernel = Kernel2D(np.arange(1, 10).reshape(3, 3))
        out = conv2d(image, kernel)
        np.testing.assert_array_equal(out[2:5, 2:5], kernel.coefficients[::-1, ::-1])
        self.assertEqual(int(np.abs(out).sum()), 45)

    def test_zero_padding(self):
        out = conv2d(np.ones((4, 4), dtype=np.int64), Kernel2D(np.ones((3, 3))))
        self.assertEqual(out[0, 0], 4)
        self.assertEqual(out[0, 1], 6)
        self.assertEqual(out[1, 1], 9)

    def test_winograd_matches_valid_region(self):
        rng = np.random.default_rng(2)
        image = rng.integers(0, 256, size=(16, 20))
        kernel = Kernel2D(rng.integers(-8, 9, size=(3, 3)))
        expected = conv2d(image, kernel)[1:-1, 1:-1]
        np.testing.assert_allclose(winograd_conv3x3(image, kernel), expected, rtol=0, atol=1e-9)

    def test_winograd_on_real_values(self):
        rng = generator(4)
        image = rng.uniform(-128.0, 128.0, size=(24, 18))
        kernel = Kernel2D(rng.integers(-256, 257, size=(3, 3)), frac_bits=8)
        np.testing.assert_allclose(winograd_conv3x3(image, kernel), correlate_valid(image, kernel),
                                   rtol=0, atol=1e-9)
        self.assertEqual(correlate_valid(image, kernel).shape, (22, 16))

    def test_winograd_shapes(self):
        with self.assertRaises(ValueError):
            winograd_conv3x3(np.zeros((5, 6)), Kernel2D(np.ones((3, 3))))
        with self.assertRaises(ValueError):
            winograd_conv3x3(np.zeros((6, 6)), Kernel2D(np.ones((5, 5))))

    def test_accumulator_overflow(self):
        image = np.full((5, 5), 255)
        with self.assertRaises(OverflowError):
            conv2d(image, Kernel2D(np.full((3, 3), 100)), acc_bits=16)

    def test_kernel_must_be_square(self):
        with self.assertRaises(ValueError):
            Kernel2D(np.ones((2, 3)))
        with self.assertRaises(ValueError):
            conv2d(np.ones((4, 4)), Kernel2D(np.ones((2, 2))))

    def test_encoded_operand_switch(self):
        image = generator(3).integers(0, 256, size=(9, 11))
        kernel = Kernel2D([[3, -5, 7], [0, 11, -13], [6, 1, -2]])
        padded = np.pad(image, 1)
        expected = {"data": 0, "coefficient": 0}
        for u in range(3):
            for v in range(3):
                window, c = padded[u:u + 9, v:v + 11], kernel.coefficients[u, v]
                expected["data"] = expected["data"] + multiply_array(Rad(8), c, window, 16)
                expected["coefficient"] = (expected["coefficient"]
                                           + multiply_array(Rad(8), window, c, 16))
        for encode, total in expected.items():
            np.testing.assert_array_equal(conv2d(image, kernel, Rad(8), encode=encode), total)
        self.assertFalse(np.array_equal(expected["data"], expected["coefficient"]))
        with self.assertRaises(ValueError):
            conv2d(image, kernel, Rad(8), encode="pixel")


class TestSobel(unittest.TestCase):

    def test_flat_image_has_no_edges(self):
        edges = sobel(GrayImage(np.full((8, 8), 10)))
        self.assertFalse(edges.edges.any())
        self.assertEqual(edges.shape, (8, 8))
        # zero padding puts a step at the border
        bright = sobel(GrayImage(np.full((8, 8), 90)))
        self.assertTrue(bright.edges[0].all())
        self.assertFalse(bright.edges[2:-2, 2:-2].any())

    def test_scene_edges_survive_rad(self):
        scene = synthetic_scene()
        reference = sobel(scene)
        self.assertGreater(int(reference.edges.sum()), 0)
        for k in (6, 8, 10):
            self.assertEqual(cer(sobel(scene, Rad(k)), reference), 1.0, msg=f"k={k}")

    def test_cer(self):
        ref = np.array([[True, True], [False, False]])
        test = np.array([[True, False], [True, False]])
        self.assertEqual(cer(test, ref), 0.5)
        self.assertEqual(cer(test, np.zeros((2, 2), dtype=bool)), 1.0)
        with self.assertRaises(ValueError):
            cer(test, np.zeros((3, 3), dtype=bool))

    def test_textured_scene_cer(self):
        scene = textured_scene()
        reference = sobel(scene)
        count = int(reference.edges.sum())
        self.assertGreater(count, 500)
        self.assertLess(count, scene.pixels.size // 2)
        for k in (6, 8):
            self.assertGreaterEqual(cer(sobel(scene, Rad(k)), reference), 0.995, msg=f"k={k}")
        self.assertGreaterEqual(cer(sobel(scene, Rad(10)), reference), 0.9)

    def test_pixels_enter_msb_aligned(self):
        self.assertEqual(pixel_shift(16), 7)
        self.assertEqual(pixel_shift(9), 0)
        with self.assertRaises(ValueError):
            pixel_shift(8)
        with self.assertRaises(ValueError):
            sobel(checkerboard(), width=8)


class TestFir(unittest.TestCase):

    def test_impulse_response(self):
        taps = hamming_sinc_taps()
        signal = np.zeros(40, dtype=np.int64)
        signal[0] = 1
        result = fir(signal, taps)
        np.testing.assert_array_equal(result.output[:32], taps)
        self.assertFalse(result.output[32:].any())
        self.assertFalse(result.overflow)

    def test_overflow_flag(self):
        result = fir(np.full(8, 32767), [32767] * 4, acc_bits=32)
        self.assertTrue(result.overflow)
        self.assertTrue(np.all(result.output >= -(1 << 31)))
        self.assertTrue(np.all(result.output < (1 << 31)))

    def test_taps(self):
        taps = hamming_sinc_taps()
        self.assertEqual(taps.size, 32)
        np.testing.assert_array_equal(taps, taps[::-1])
        self.assertEqual(int(taps.max()), 32767)

    def test_no_taps(self):
        with self.assertRaises(ValueError):
            fir([1, 2], [])

    def test_coefficient_encoding(self):
        taps = hamming_sinc_taps()
        signal = np.zeros(40, dtype=np.int64)
        signal[0] = 1000
        result = fir(signal, taps, Rad(8), encode="coefficient")
        np.testing.assert_array_equal(result.output[:32], multiply_array(Rad(8), 1000, taps, 16))
        data = fir(signal, taps, Rad(8))
        np.testing.assert_array_equal(data.output[:32],
                                      multiply_array(Rad(8), taps, np.int64(1000), 16))
        self.assertFalse(np.array_equal(result.output, data.output))
        with self.assertRaises(ValueError):
            fir(signal, taps, encode="sample")

    def test_rad10_figure(self):
        signal = random_signal(200_000, seed=1)
        self.assertGreaterEqual(int(signal.min()), -32768)
        self.assertLessEqual(int(signal.max()), 32767)
        taps = hamming_sinc_taps()
        report = metrics_from_arrays(fir(signal, taps).output, fir(signal, taps, Rad(10)).output)
        self.assertAlmostEqual(report.mred, 0.036, delta=0.018)


class TestMatmul(unittest.TestCase):

    def test_tiled_matches_numpy(self):
        rng = np.random.default_rng(5)
        left = rng.integers(-100, 100, size=(5, 7))
        right = rng.integers(-100, 100, size=(7, 4))
        np.testing.assert_array_equal(matmul_tiled(left, right), left @ right)
        np.testing.assert_array_equal(matmul_tiled(left, right, tile=2), left @ right)

    def test_tiled_shape_check(self):
        with self.assertRaises(ValueError):
            matmul_tiled(np.ones((2, 3)), np.ones((2, 3)))

    def test_batch_matches_einsum(self):
        rng = np.random.default_rng(6)
        left = rng.integers(-500, 500, size=(10, 3, 3))
        right = rng.integers(-500, 500, size=(10, 3, 3))
        np.testing.assert_array_equal(matmul_batch(left, right),
                                      np.einsum("tij,tjk->tik", left, right))

    def test_approximate_batch_uses_tiles(self):
        rng = np.random.default_rng(6)
        left = rng.integers(-500, 500, size=(4, 3, 3))
        right = rng.integers(-500, 500, size=(4, 3, 3))
        expected = np.stack([matmul_tiled(x, y, Rad(8)) for x, y in zip(left, right)])
        np.testing.assert_array_equal(matmul_batch(left, right, Rad(8)), expected)

    def test_random_tiles(self):
        left, right = random_tiles(1000, seed=2)
        self.assertEqual(left.shape, (1000, 3, 3))
        self.assertEqual(right.shape, (1000, 3, 3))
        self.assertGreaterEqual(int(min(left.min(), right.min())), 0)
        self.assertLess(int(max(left.max(), right.max())), tile_entry_limit())
        self.assertEqual(tile_entry_limit(), 12288)
        again, _ = random_tiles(1000, seed=2)
        np.testing.assert_array_equal(left, again)

    def test_rad10_figure(self):
        left, right = random_tiles(200_000, seed=1)
        report = metrics_from_arrays(matmul_batch(left, right), matmul_batch(left, right, Rad(10)))
        self.assertAlmostEqual(report.mred, 0.0057, delta=0.25 * 0.0057)


class TestQuality(unittest.TestCase):

    def test_psnr(self):
        a = np.zeros((256, 256), dtype=np.uint8)
        b = a.copy()
        b[10, 10] = 1
        self.assertEqual(psnr(a, a), math.inf)
        self.assertAlmostEqual(psnr(a, b), 10 * math.log10(255 ** 2 * 65536), places=9)

    def test_ssim(self):
        board = checkerboard()
        self.assertAlmostEqual(ssim(board, board), 1.0, places=9)
        inverse = GrayImage(255 - board.pixels)
        self.assertLess(ssim(board, inverse), -0.9)

    def test_ssim_needs_a_full_window(self):
        with self.assertRaises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))


class TestPgm(unittest.TestCase):

    def test_round_trip(self):
        image = GrayImage(np.arange(12).reshape(3, 4) * 20)
        self.assertEqual(pgm_decode(pgm_encode(image)), image)
        self.assertEqual(pgm_decode(pgm_encode(image, binary=False)), image)

    def test_files(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "scene.pgm")
            pgm_write(path, synthetic_scene())
            self.assertEqual(pgm_read(path), synthetic_scene())

    def test_comments(self):
        image = pgm_decode(b"P2\n# made by hand\n2 1\n255\n0 # left\n255\n")
        np.testing.assert_array_equal(image.pixels, [[0, 255]])

    def test_errors(self):
        for data in (b"P6\n1 1\n255\n\x00", b"P5\n2 2\n255\n\x00", b"P5 2 2",
                     b"P5\nx 2\n255\n\x00", b"P2\n1 1\n10\n11\n", b"P5\n1 1\n300\n\x00"):
            with self.assertRaises(PgmFormatError, msg=repr(data)):
                pgm_decode(data)


class TestScene(unittest.TestCase):

    def test_values(self):
        scene = synthetic_scene()
        self.assertEqual(scene.pixels.shape, (256, 256))
        self.assertEqual(set(np.unique(scene.pixels).tolist()), {20, 132, 200, 240})
        self.assertEqual(scene.pixels[0, 0], 20)
        self.assertEqual(scene.pixels[50, 50], 132)
        self.assertEqual(scene.pixels[170, 80], 200)
        self.assertEqual(scene.pixels[200, 170], 240)

    def test_textured_scene(self):
        scene = textured_scene()
        self.assertEqual(scene.pixels.shape, (256, 256))
        self.assertGreater(np.unique(scene.pixels).size, 100)
        self.assertEqual(textured_scene(), scene)
        self.assertNotEqual(textured_scene(seed=8), scene)

    def test_bad_pixels(self):
        with self.assertRaises(ValueError):
            GrayImage(np.array([[256]]))
        with self.assertRaises(ValueError):
            GrayImage(np.zeros(4))


class TestBlur(unittest.TestCase):

    def test_flat_image(self):
        blurred = gaussian_blur(GrayImage(np.full((6, 6), 160)))
        self.assertEqual(blurred.pixels[2, 2], 160)
        self.assertEqual(blurred.pixels[0, 0], 90)

    def test_presets_match_accurate_on_scene(self):
        scene = synthetic_scene()
        accurate = gaussian_blur(scene)
        for name, preset in BLUR_PRESETS.items():
            if preset is None:
                continue
            p, r = preset
            self.assertEqual(gaussian_blur(scene, p=p, r=r), accurate, msg=name)

    def test_approximation_changes_odd_pixels(self):
        image = GrayImage(np.full((6, 6), 255))
        self.assertLess(psnr(gaussian_blur(image, p=0, r=20), gaussian_blur(image)), math.inf)
        self.assertEqual(gaussian_blur(image, p=0, r=0), gaussian_blur(image))
