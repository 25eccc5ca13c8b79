"""
DSP workloads driven by a multiplier configuration.

Fixed-point kernels multiply `multiply_array(cfg, coefficient, data)`:
the data value (pixel, sample, right matrix entry) is the encoded
operand B. conv2d, sobel and fir take encode="coefficient" to encode
the coefficient instead. All 2D filters compute cross-correlation with
zero padding.
"""
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .approx_fixed import Accurate, AxFxu, multiply_array
from .errors import PgmFormatError
from .error_lab import decode_words
from .float_mul import SINGLE, fp_multiply_bits
from .utils import check_width, generator, signed_range


logger = logging.getLogger(__name__)

DEFAULT_WIDTH = 16


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image.

    Attributes:
        pixels (numpy.ndarray): uint8 array of shape (height, width).
        maxval (int): Largest representable intensity.
    """
    pixels: np.ndarray
    maxval: int = 255

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise ValueError(f"image must be 2D, got shape {pixels.shape}")
        if pixels.size and (pixels.min() < 0 or pixels.max() > self.maxval):
            raise ValueError(f"pixel outside [0, {self.maxval}]")
        object.__setattr__(self, "pixels", pixels.astype(np.uint8))

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.maxval == other.maxval and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """Square kernel of signed fixed-point coefficients.

    Attributes:
        coefficients (numpy.ndarray): Integer coefficients, r x r.
        frac_bits (int): Fractional bits; the real value of c is c / 2^frac_bits.
    """
    coefficients: np.ndarray
    frac_bits: int = 0

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=np.int64)
        if coefficients.ndim != 2 or coefficients.shape[0] != coefficients.shape[1]:
            raise ValueError(f"kernel must be square, got shape {coefficients.shape}")
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def size(self):
        return self.coefficients.shape[0]

    def real(self):
        return self.coefficients / float(1 << self.frac_bits)


class EdgeMap(NamedTuple):
    """Boolean edge raster with the dimensions of its source image."""
    edges: np.ndarray

    @property
    def shape(self):
        return self.edges.shape


SOBEL_X = Kernel2D([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]])
SOBEL_Y = Kernel2D([[-1, -2, -1], [0, 0, 0], [1, 2, 1]])


def _raster(image):
    if isinstance(image, GrayImage):
        return image.pixels.astype(np.int64)
    return np.asarray(image, dtype=np.int64)


def _real_raster(image):
    if isinstance(image, GrayImage):
        return image.pixels.astype(np.float64)
    return np.asarray(image, dtype=np.float64)


def _check_accumulator(total, bits, where):
    low, high = signed_range(bits)
    if total.size and (total.min() < low or total.max() > high):
        raise OverflowError(f"{where}: accumulator exceeds {bits} bits")


ENCODED_OPERANDS = ("data", "coefficient")


def _check_encode(encode):
    if encode not in ENCODED_OPERANDS:
        raise ValueError(f"encode must be one of {ENCODED_OPERANDS}, got {encode!r}")


def _multiply(cfg, coefficient, data, width, encode):
    """Product with `encode` naming the operand the multiplier encodes (B)."""
    if encode == "coefficient":
        return np.asarray(multiply_array(cfg, data, coefficient, width), dtype=np.int64)
    return np.asarray(multiply_array(cfg, coefficient, data, width), dtype=np.int64)


def pixel_shift(width):
    """Left shift that puts an 8-bit pixel under the sign bit of a `width`-bit word."""
    if width < 9:
        raise ValueError(f"8-bit pixels need a signed width of at least 9, got {width}")
    return width - 9


def conv2d(image, kernel, cfg=None, width=DEFAULT_WIDTH, acc_bits=None, encode="data",
           data_shift=0):
    """Zero-padded 2D cross-correlation through the configured multiplier.

    Args:
        image (GrayImage): Input, or any integer raster.
        kernel (Kernel2D): Odd-sized kernel.
        cfg (AxConfig, optional): Multiplier. Defaults to Accurate.
        width (int, optional): Operand width of the multiplier.
        acc_bits (int, optional): Accumulator width. Defaults to
            2 * width + ceil(log2(r * r)).
        encode (str, optional): "data" feeds each pixel as the encoded
            operand B and the coefficient as A; "coefficient" swaps them.
        data_shift (int, optional): Pixels enter the multiplier shifted
            left by this many bits; the sum is shifted back (floor).

    Returns:
        numpy.ndarray: Integer raster of the input's shape.

    Raises:
        OverflowError: A partial sum leaves the accumulator range.
    """
    cfg = cfg or Accurate()
    _check_encode(encode)
    pixels = _raster(image)
    size = kernel.size
    if size % 2 == 0:
        raise ValueError(f"kernel size {size} must be odd")
    acc_bits = acc_bits or 2 * width + math.ceil(math.log2(size * size))
    pad = size // 2
    padded = np.pad(pixels, pad) << data_shift
    height, cols = pixels.shape
    total = np.zeros(pixels.shape, dtype=np.int64)
    for u in range(size):
        for v in range(size):
            window = padded[u:u + height, v:v + cols]
            total = total + _multiply(cfg, kernel.coefficients[u, v], window, width, encode)
            _check_accumulator(total, acc_bits, "conv2d")
    logger.debug("conv2d %dx%d with %s encoding the %s", height, cols, cfg, encode)
    return total >> data_shift


# F(2x2, 3x3) transforms
WINOGRAD_G = np.array([[2, 0, 0], [1, 1, 1], [1, -1, 1], [0, 0, 2]]) / 2
WINOGRAD_BT = np.array([[1, 0, -1, 0], [0, 1, 1, 0], [0, -1, 1, 0], [0, 1, 0, -1]], dtype=float)
WINOGRAD_AT = np.array([[1, 1, 1, 0], [0, 1, -1, -1]], dtype=float)


def winograd_conv3x3(image, kernel):
    """Valid-region 3x3 cross-correlation by Winograd F(2x2, 3x3).

    4x4 input tiles at stride 2 are transformed with BT d B, multiplied
    element-wise with the transformed kernel G g GT and folded back with
    AT m A into 2x2 output tiles.

    Returns:
        numpy.ndarray: float64 raster of shape (height - 2, width - 2).
    """
    if kernel.size != 3:
        raise ValueError(f"Winograd F(2x2, 3x3) needs a 3x3 kernel, got {kernel.size}")
    pixels = _real_raster(image)
    height, cols = pixels.shape
    if height % 2 or cols % 2 or height < 4 or cols < 4:
        raise ValueError(f"image dimensions must be even and >= 4, got {pixels.shape}")
    transformed = WINOGRAD_G @ kernel.real() @ WINOGRAD_G.T
    tiles = sliding_window_view(pixels, (4, 4))[::2, ::2]
    data = WINOGRAD_BT @ tiles @ WINOGRAD_BT.T
    out = WINOGRAD_AT @ (data * transformed) @ WINOGRAD_AT.T
    rows, columns = out.shape[:2]
    return out.transpose(0, 2, 1, 3).reshape(rows * 2, columns * 2)


def correlate_valid(image, kernel):
    """Direct valid-region cross-correlation of a real raster, in float64."""
    windows = sliding_window_view(_real_raster(image), (kernel.size, kernel.size))
    return np.einsum("ijuv,uv->ij", windows, kernel.real())


def sobel(image, cfg=None, threshold=128, width=DEFAULT_WIDTH, encode="data"):
    """Edge at a pixel iff |Gx| + |Gy| > threshold.

    Pixels enter the multiplier MSB-aligned (see pixel_shift); the
    gradients are on the 8-bit scale.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    shift = pixel_shift(width)
    gx = conv2d(image, SOBEL_X, cfg, width, encode=encode, data_shift=shift)
    gy = conv2d(image, SOBEL_Y, cfg, width, encode=encode, data_shift=shift)
    return EdgeMap(np.abs(gx) + np.abs(gy) > threshold)


def cer(test, ref):
    """Correct edge ratio |test & ref| / |ref|; 1 when ref has no edge."""
    test, ref = np.asarray(getattr(test, "edges", test)), np.asarray(getattr(ref, "edges", ref))
    if test.shape != ref.shape:
        raise ValueError(f"edge maps differ in shape: {test.shape} != {ref.shape}")
    reference = int(ref.sum())
    if not reference:
        return 1.0
    return float((test & ref).sum()) / reference


class FirOutput(NamedTuple):
    """Filtered stream and whether the accumulator wrapped."""
    output: np.ndarray
    overflow: bool


def fir(signal, taps, cfg=None, width=DEFAULT_WIDTH, acc_bits=None, encode="data"):
    """y[t] = sum_i h_i * x[t - i] with zero history.

    Args:
        signal (array_like): Samples.
        taps (array_like): Coefficients h_i.
        cfg (AxConfig, optional): Multiplier. Defaults to Accurate.
        width (int, optional): Operand width.
        acc_bits (int, optional): Accumulator width; wrapped results
            set the overflow flag. Defaults to 2 * width + ceil(log2(taps)).
        encode (str, optional): "data" feeds the samples as the encoded
            operand B, "coefficient" feeds the taps.
    """
    cfg = cfg or Accurate()
    _check_encode(encode)
    taps = np.asarray(taps, dtype=np.int64)
    if not taps.size:
        raise ValueError("fir needs at least one tap")
    samples = np.asarray(signal, dtype=np.int64)
    acc_bits = acc_bits or 2 * width + max(math.ceil(math.log2(taps.size)), 1)
    low, high = signed_range(acc_bits)
    total = np.zeros(samples.shape, dtype=np.int64)
    overflow = False
    for i, tap in enumerate(taps.tolist()):
        delayed = np.concatenate([np.zeros(min(i, samples.size), dtype=np.int64),
                                  samples[:max(samples.size - i, 0)]])
        total = total + _multiply(cfg, tap, delayed, width, encode)
        wrapped = (total < low) | (total > high)
        if wrapped.any():
            overflow = True
            total = ((total - low) % (high - low + 1)) + low
    return FirOutput(total, overflow)


def matmul_tiled(left, right, cfg=None, tile=3, width=DEFAULT_WIDTH):
    """Tiled product left @ right with every scalar multiply configured.

    Dimensions are zero-padded to multiples of `tile`; the result is
    cropped back.
    """
    cfg = cfg or Accurate()
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    if left.ndim != 2 or right.ndim != 2 or left.shape[1] != right.shape[0]:
        raise ValueError(f"cannot multiply {left.shape} by {right.shape}")
    rows, inner = left.shape
    cols = right.shape[1]

    def padded(matrix, shape):
        return np.pad(matrix, [(0, (-n) % tile) for n in shape])

    left_p, right_p = padded(left, left.shape), padded(right, right.shape)
    out = np.zeros((left_p.shape[0], right_p.shape[1]), dtype=np.int64)
    for i in range(0, left_p.shape[0], tile):
        for j in range(0, right_p.shape[1], tile):
            block = out[i:i + tile, j:j + tile]
            for k in range(0, left_p.shape[1], tile):
                a = left_p[i:i + tile, k:k + tile]
                b = right_p[k:k + tile, j:j + tile]
                for t in range(tile):
                    block += np.asarray(
                        multiply_array(cfg, a[:, t:t + 1], b[t:t + 1, :], width), dtype=np.int64)
    return out[:rows, :cols]


def matmul_batch(left, right, cfg=None, width=DEFAULT_WIDTH):
    """Products of stacked square tiles, left[t] @ right[t] for every t."""
    cfg = cfg or Accurate()
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    if left.ndim != 3 or left.shape != right.shape or left.shape[1] != left.shape[2]:
        raise ValueError(f"need matching stacks of square tiles, got {left.shape} and {right.shape}")
    terms = multiply_array(cfg, left[:, :, :, None], right[:, None, :, :], width)
    return np.asarray(terms, dtype=np.int64).sum(axis=2)


def tile_entry_limit(width=DEFAULT_WIDTH):
    """Exclusive bound of random tile entries: 3 * 2^(width-4)."""
    return 3 << (width - 4)


def random_tiles(count, seed, width=DEFAULT_WIDTH, tile=3):
    """Seeded (left, right) stacks of `count` tile x tile matrices.

    Entries are uniform over [0, tile_entry_limit(width)); non-negative
    operands keep the dot products free of cancellation.
    """
    check_width(width)
    limit = tile_entry_limit(width)
    draws = generator(seed).integers(0, limit, size=(2, count, tile, tile), dtype=np.int64)
    return draws[0], draws[1]


def random_signal(count, seed, width=DEFAULT_WIDTH):
    """Seeded samples uniform over the signed `width`-bit range."""
    low, high = signed_range(width)
    return generator(seed).integers(low, high + 1, size=count, dtype=np.int64)


def psnr(a, b):
    """Peak signal-to-noise ratio in dB for 8-bit images; inf if identical."""
    x, y = _raster(a).astype(np.float64), _raster(b).astype(np.float64)
    if x.shape != y.shape:
        raise ValueError(f"images differ in shape: {x.shape} != {y.shape}")
    mse = np.mean((x - y) ** 2)
    if mse == 0:
        return math.inf
    return 10 * math.log10(255.0 ** 2 / mse)


SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    offsets = np.arange(size) - (size - 1) / 2
    window = np.exp(-offsets ** 2 / (2 * sigma ** 2))
    return window / window.sum()


def _filter_valid(x, window):
    rows = sliding_window_view(x, window.size, axis=0) @ window
    return sliding_window_view(rows, window.size, axis=1) @ window


def ssim(a, b, data_range=255.0):
    """Mean structural similarity over 11x11 Gaussian windows (sigma 1.5).

    Only windows fully inside the image are used.
    """
    x, y = _raster(a).astype(np.float64), _raster(b).astype(np.float64)
    if x.shape != y.shape:
        raise ValueError(f"images differ in shape: {x.shape} != {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    window = _gaussian_window()
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_x, mu_y = _filter_valid(x, window), _filter_valid(y, window)
    var_x = _filter_valid(x * x, window) - mu_x ** 2
    var_y = _filter_valid(y * y, window) - mu_y ** 2
    cov = _filter_valid(x * y, window) - mu_x * mu_y
    ratio = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)
             / ((mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)))
    return float(ratio.mean())


# PGM

_PGM_TOKEN = re.compile(rb"(#[^\r\n]*[\r\n]?)|(\s+)|([^\s#]+)")


def _pgm_header(data):
    """Return (magic, width, height, maxval, payload offset)."""
    tokens = []
    position = 0
    while len(tokens) < 4:
        match = _PGM_TOKEN.match(data, position)
        if match is None:
            raise PgmFormatError("truncated header")
        if match.group(3):
            tokens.append(match.group(3))
        position = match.end()
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PgmFormatError(f"unsupported magic number {magic!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PgmFormatError("non-numeric header field") from None
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise PgmFormatError(f"bad header {width}x{height} maxval {maxval}")
    # a single whitespace byte separates the header from the payload
    if not data[position:position + 1].isspace():
        raise PgmFormatError("missing whitespace after header")
    return magic, width, height, maxval, position + 1


def pgm_decode(data):
    """Parse P2 (ASCII) or P5 (binary) bytes into a GrayImage.

    Raises:
        PgmFormatError: Malformed header or truncated payload.
    """
    magic, width, height, maxval, position = _pgm_header(data)
    count = width * height
    if magic == b"P5":
        payload = data[position:position + count]
        if len(payload) < count:
            raise PgmFormatError(f"payload holds {len(payload)} of {count} pixels")
        pixels = np.frombuffer(payload, dtype=np.uint8)
    else:
        body = re.sub(rb"#[^\r\n]*", b"", data[position:]).split()
        if len(body) < count:
            raise PgmFormatError(f"payload holds {len(body)} of {count} pixels")
        try:
            pixels = np.array([int(v) for v in body[:count]], dtype=np.int64)
        except ValueError:
            raise PgmFormatError("non-numeric pixel value") from None
    if pixels.max() > maxval:
        raise PgmFormatError(f"pixel above maxval {maxval}")
    return GrayImage(pixels.reshape(height, width), maxval)


def pgm_encode(image, binary=True):
    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n{image.maxval}\n"
    if binary:
        return header.encode("ascii") + image.pixels.tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in image.pixels.tolist())
    return (header + rows + "\n").encode("ascii")


def pgm_read(path):
    return pgm_decode(Path(path).read_bytes())


def pgm_write(path, image, binary=True):
    Path(path).write_bytes(pgm_encode(image, binary))


# Test content

SCENE_SIZE = 256
SCENE_BACKGROUND = 20


def synthetic_scene():
    """Deterministic 256x256 scene.

    Background 20 with a rectangle of 132, a disk of 200 and a triangle
    of 240, at least three pixels apart and away from the borders.
    """
    pixels = np.full((SCENE_SIZE, SCENE_SIZE), SCENE_BACKGROUND, dtype=np.uint8)
    rows, cols = np.ogrid[:SCENE_SIZE, :SCENE_SIZE]
    pixels[30:100, 30:120] = 132
    pixels[(rows - 170) ** 2 + (cols - 80) ** 2 <= 45 ** 2] = 200
    triangle = (rows >= 40) & (rows <= 220) & (cols >= 160) & ((cols - 160) * 180 <= (rows - 40) * 65)
    pixels[triangle] = 240
    return GrayImage(pixels)


TEXTURE_SEED = 7
TEXTURE_SIGMA = 4.0


def textured_scene(seed=TEXTURE_SEED):
    """Deterministic 256x256 continuous-tone scene.

    A lighting ramp under smoothed seeded noise, with a soft-edged bright
    disk and a dark bar, so gradient magnitudes spread across the usual
    edge thresholds instead of jumping over them.
    """
    window = _gaussian_window(size=6 * int(TEXTURE_SIGMA) + 1, sigma=TEXTURE_SIGMA)
    side = SCENE_SIZE + window.size - 1
    field = _filter_valid(generator(seed).normal(size=(side, side)), window)
    field = field / np.abs(field).max()
    rows, cols = np.mgrid[:SCENE_SIZE, :SCENE_SIZE].astype(np.float64)
    distance = np.hypot(rows - 150, cols - 100)
    disk = 0.5 * (1 + np.tanh(48 - distance))
    bar = (0.25 * (1 + np.tanh((rows - 40) / 1.5)) * (1 + np.tanh((90 - rows) / 1.5))
           * (cols >= 150) * (cols < 230))
    values = 60 + 0.25 * (rows + cols) + 45 * field + 90 * disk - 50 * bar
    return GrayImage(np.clip(np.rint(values), 0, 255).astype(np.uint8))


GAUSSIAN_3X3 = Kernel2D([[1, 2, 1], [2, 4, 2], [1, 2, 1]], frac_bits=4)

# Single-precision blur configurations: name -> (P, R), None for accurate.
BLUR_PRESETS = {
    "accurate": None,
    "axfpu32_4_12": (4, 12),
    "axfpu32_6_14": (6, 14),
    "axfpu32_10_18": (10, 18),
}


def gaussian_blur(image, fmt=SINGLE, p=None, r=None):
    """3x3 Gaussian blur in floating point.

    Each pixel (operand A) is multiplied by its coefficient (operand B)
    on the accurate multiplier, or on AxFPU with (P, R) when given.
    Zero pixels bypass the multiplier. Products accumulate in `fmt`
    and are rounded back to 8 bits.
    """
    cfg = None if p is None else AxFxu(p, r or 0)
    pixels = _raster(image)
    padded = np.pad(pixels, 1).astype(fmt.dtype)
    height, cols = pixels.shape
    coefficient_bits = GAUSSIAN_3X3.real().astype(fmt.dtype).view(fmt.uint_dtype)
    total = np.zeros(pixels.shape, dtype=fmt.dtype)
    for u in range(3):
        for v in range(3):
            window = padded[u:u + height, v:v + cols]
            nonzero = window != 0
            a_bits = window[nonzero].view(fmt.uint_dtype).astype(np.int64)
            b_bits = np.full(a_bits.shape, int(coefficient_bits[u, v]), dtype=np.int64)
            products = np.zeros(pixels.shape, dtype=fmt.dtype)
            if a_bits.size:
                out = fp_multiply_bits(a_bits, b_bits, fmt, cfg)
                products[nonzero] = decode_words(out.bits, fmt).astype(fmt.dtype)
            total = total + products
    logger.debug("gaussian blur %s with %s", fmt, cfg or "accurate")
    return GrayImage(np.clip(np.rint(total.astype(np.float64)), 0, 255).astype(np.uint8))


def hamming_sinc_taps(num_taps=32, cutoff=20_000.0, rate=48_000.0, bits=16):
    """Low-pass taps: Hamming-windowed sinc quantized to `bits`-bit integers."""
    n = np.arange(num_taps) - (num_taps - 1) / 2
    normalized = cutoff / rate
    ideal = 2 * normalized * np.sinc(2 * normalized * n)
    taps = ideal * np.hamming(num_taps)
    scale = ((1 << (bits - 1)) - 1) / np.max(np.abs(taps))
    return np.rint(taps * scale).astype(np.int64)


__all__ = [
    "GrayImage", "Kernel2D", "EdgeMap", "SOBEL_X", "SOBEL_Y", "conv2d",
    "winograd_conv3x3", "correlate_valid", "sobel", "cer", "FirOutput", "fir", "matmul_tiled",
    "matmul_batch",    "psnr", "ssim", "pgm_decode", "pgm_encode", "pgm_read", "pgm_write",
    "synthetic_scene", "textured_scene", "GAUSSIAN_3X3", "BLUR_PRESETS", "gaussian_blur",
    "hamming_sinc_taps", "pixel_shift", "random_tiles", "random_signal", "tile_entry_limit",
]
