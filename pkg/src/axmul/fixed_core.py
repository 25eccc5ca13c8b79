"""
Two's-complement operands and the accurate radix-4 Modified Booth
multiplier, with an independent shift-and-add oracle.

Every multiplier in this package is modeled at value level: a partial
product is a signed integer placed at a column, which is what the
sign-extension and negation tricks of the hardware matrix reduce to.
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import WidthError
from .utils import as_words, bit, check_width, signed_range, widen


@dataclass(frozen=True)
class FixedOperand:
    """An n-bit two's-complement operand.

    Attributes:
        width (int): Bit count n, even, 4 <= n <= 64.
        value (int): Signed value in [-2^(n-1), 2^(n-1) - 1].
    """
    width: int
    value: int

    def __post_init__(self):
        check_width(self.width)
        low, high = signed_range(self.width)
        if not low <= self.value <= high:
            raise WidthError(f"{self.value} does not fit {self.width} bits")
        object.__setattr__(self, "value", int(self.value))

    @classmethod
    def from_bits(cls, bits, width):
        """Read an unsigned bit pattern as a two's-complement operand."""
        bits = int(bits) & ((1 << width) - 1)
        if bits >> (width - 1):
            bits -= 1 << width
        return cls(width, bits)

    def bit(self, index):
        """Returns a_i; bit -1 reads as 0."""
        if index < 0:
            return 0
        if index >= self.width:
            raise IndexError(f"bit {index} of a {self.width}-bit operand")
        return (self.value >> index) & 1

    def to_unsigned(self):
        return self.value & ((1 << self.width) - 1)

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class Radix4Digit:
    """Modified Booth digit y_j in {0, +-1, +-2} with its encoding signals."""
    sign: int
    one: int
    two: int

    def __post_init__(self):
        if self.one and self.two:
            raise ValueError("one and two signals are mutually exclusive")

    @property
    def value(self):
        magnitude = 2 * self.two + self.one
        return -magnitude if self.sign else magnitude

    @classmethod
    def from_bits(cls, high, mid, low):
        """Encode the triplet (b_{2j+1}, b_{2j}, b_{2j-1})."""
        one = low ^ mid
        two = (high ^ mid) & (1 - one)
        return cls(sign=high, one=one, two=two)


@dataclass(frozen=True)
class PartialProductTerm:
    """Signed partial product `value` weighted by 2^weight_exponent."""
    weight_exponent: int
    value: int

    @property
    def contribution(self):
        return self.value << self.weight_exponent


def _check_pair(A, B):
    if A.width != B.width:
        raise WidthError(f"operand widths differ: {A.width} != {B.width}")
    return A.width


def encode_radix4(B, b_minus1=0) -> List[Radix4Digit]:
    """Accurate radix-4 encoding of B.

    Args:
        B (FixedOperand): Multiplier operand.
        b_minus1 (int, optional): Value injected at bit -1. Defaults to 0.

    Returns:
        list: n/2 digits, least significant first.
    """
    digits = []
    for j in range(B.width // 2):
        low = b_minus1 if j == 0 else B.bit(2 * j - 1)
        digits.append(Radix4Digit.from_bits(B.bit(2 * j + 1), B.bit(2 * j), low))
    return digits


def recompose(digits):
    """Sum of 4^j * y_j."""
    return sum(digit.value << (2 * j) for j, digit in enumerate(digits))


def partial_products(A, B) -> List[PartialProductTerm]:
    """The n/2 accurate partial products A * y_j at column 2j."""
    _check_pair(A, B)
    return [PartialProductTerm(2 * j, A.value * digit.value)
            for j, digit in enumerate(encode_radix4(B))]


def multiply_accurate(A, B):
    """Accurate Modified Booth product A * B."""
    return sum(term.contribution for term in partial_products(A, B))


def oracle_multiply(A, B):
    """Sign-magnitude shift-and-add product, no Booth encoding."""
    _check_pair(A, B)
    magnitude_a, magnitude_b = abs(A.value), abs(B.value)
    product = 0
    for i in range(magnitude_b.bit_length()):
        if (magnitude_b >> i) & 1:
            product += magnitude_a << i
    return -product if (A.value < 0) != (B.value < 0) else product


def radix4_digits(b, width, b_minus1=None):
    """Radix-4 digit values of every word in `b`.

    Args:
        b (numpy.ndarray): Words of `width` bits.
        width (int): Operand width n.
        b_minus1 (numpy.ndarray, optional): Bits injected at position -1.

    Returns:
        list: n/2 arrays of digit values, least significant first.
    """
    digits = []
    for j in range(width // 2):
        if j == 0 and b_minus1 is not None:
            low = b_minus1
        else:
            low = bit(b, 2 * j - 1)
        digits.append(-2 * bit(b, 2 * j + 1) + bit(b, 2 * j) + low)
    return digits


def booth_rows(a, b, width, first=0, b_minus1=None):
    """Sum of the Booth rows A * y_j * 4^j for j >= first."""
    a, b = widen(a, width), widen(b, width)
    digits = radix4_digits(b, width, b_minus1)
    total = np.zeros(np.broadcast(a, b).shape, dtype=a.dtype)
    for j in range(first, width // 2):
        total = total + ((a * digits[j]) << (2 * j))
    return total


def booth_product(a, b, width):
    """Array form of multiply_accurate."""
    check_width(width)
    return booth_rows(as_words(a, width), as_words(b, width), width)


def school_product(a, b, width):
    """Array form of oracle_multiply."""
    check_width(width)
    a, b = as_words(a, width), as_words(b, width)
    magnitude_a, magnitude_b = np.abs(a), np.abs(b)
    total = np.zeros(np.broadcast(a, b).shape, dtype=a.dtype)
    for i in range(width):
        total = total + np.where(bit(magnitude_b, i) == 1, magnitude_a << i, 0)
    negative = (a < 0) != (b < 0)
    return np.where(negative, -total, total)
