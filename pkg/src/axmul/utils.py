"""
Helpers shared by the multiplier models: word arrays, bit access
and the seeded generator every sampler draws from.
"""
import os

import numpy as np

from .errors import WidthError


# Widest operand whose Booth partial sums still fit an int64 lane.
NATIVE_WIDTH = 32

MIN_WIDTH = 4
MAX_WIDTH = 64

THREADS_ENV = "AXMUL_THREADS"


def check_width(width, even=True):
    """Validate an operand width.

    Args:
        width (int): Bit count n.
        even (bool, optional): Reject odd widths. Defaults to True.

    Raises:
        WidthError: Width is odd or outside [4, 64].
    """
    if not isinstance(width, (int, np.integer)) or isinstance(width, bool):
        raise WidthError(f"width must be an integer, got {width!r}")
    if width < MIN_WIDTH or width > MAX_WIDTH:
        raise WidthError(f"width {width} outside [{MIN_WIDTH}, {MAX_WIDTH}]")
    if even and width % 2:
        raise WidthError(f"width {width} is odd")
    return int(width)


def signed_range(width):
    """Returns the inclusive two's-complement range of `width` bits."""
    return -(1 << (width - 1)), (1 << (width - 1)) - 1


def word_dtype(width):
    """int64 lanes up to NATIVE_WIDTH, Python integers above it."""
    return np.int64 if width <= NATIVE_WIDTH else object


def as_words(values, width, check=True):
    """Convert `values` to an array able to hold exact products of `width`-bit words.

    Args:
        values (array_like): Signed integers.
        width (int): Operand width n.
        check (bool, optional): Verify every value fits `width` bits.

    Returns:
        numpy.ndarray: int64 or object array.

    Raises:
        WidthError: A value does not fit.
    """
    words = np.asarray(values, dtype=word_dtype(width))
    if check and words.size:
        low, high = signed_range(width)
        if words.min() < low or words.max() > high:
            raise WidthError(f"value outside the {width}-bit two's-complement range")
    return words


def widen(values, width):
    """Re-type already validated words for arithmetic at `width` bits."""
    return np.asarray(values, dtype=word_dtype(width))


def bit(values, index):
    """Bit `index` of each word; bit -1 reads as 0."""
    if index < 0:
        return np.zeros_like(values)
    return (values >> index) & 1


def low_signed(values, bits):
    """The `bits` LSBs of each word read as a two's-complement number."""
    half = 1 << (bits - 1)
    return ((values & ((1 << bits) - 1)) ^ half) - half


def wrap(values, width):
    """Wrap integers into the `width`-bit two's-complement range."""
    return low_signed(values, width)


def trailing_zeros(value):
    """Number of trailing zero bits of a positive integer."""
    return (value & -value).bit_length() - 1


def generator(seed):
    """Counter-based generator for reproducible streams.

    The seed is expanded by numpy's SeedSequence into the Philox key,
    so equal seeds give identical streams on every platform.
    """
    return np.random.Generator(np.random.Philox(seed))


def default_threads():
    """Worker count for sweeps, read from AXMUL_THREADS."""
    try:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        return 1
    return max(threads, 1)
