"""
Double-LSB (DLSB) numbers.

A DLSB operand is an n-bit two's-complement core plus one extra bit
of LSB weight, so its range [-2^(n-1), 2^(n-1)] is symmetric and
negation is a plain inversion of all n+1 bits.
"""
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from .errors import WidthError
from .fixed_core import FixedOperand, booth_rows, radix4_digits
from .utils import as_words, bit, check_width, low_signed, widen, wrap


@dataclass(frozen=True)
class DlsbOperand:
    """X+ = core + x_{0+}.

    Attributes:
        core (FixedOperand): n-bit two's-complement part.
        extra_lsb (int): The extra bit x_{0+}.
    """
    core: FixedOperand
    extra_lsb: int = 0

    def __post_init__(self):
        if self.extra_lsb not in (0, 1):
            raise ValueError(f"extra LSB must be 0 or 1, got {self.extra_lsb!r}")

    @classmethod
    def of(cls, width, core, extra_lsb=0):
        return cls(FixedOperand(width, core), extra_lsb)

    @property
    def width(self):
        return self.core.width

    @property
    def value(self):
        return self.core.value + self.extra_lsb


class DlsbSum(NamedTuple):
    """Adder output; `wrapped` is set when the core adder overflowed."""
    result: DlsbOperand
    wrapped: bool


def dlsb_value(X):
    return X.value


def dlsb_negate(X):
    """Invert all n+1 bits; the result is exactly -X."""
    return DlsbOperand(FixedOperand(X.width, ~X.core.value), 1 - X.extra_lsb)


def dlsb_add(A, B):
    """Add on a conventional n-bit adder.

    B's extra LSB drives the carry-in and A's extra LSB becomes the
    extra LSB of the sum.

    Returns:
        DlsbSum: Result and wrap flag.
    """
    if A.width != B.width:
        raise WidthError(f"operand widths differ: {A.width} != {B.width}")
    raw = A.core.value + B.core.value + B.extra_lsb
    core = int(wrap(raw, A.width))
    result = DlsbOperand(FixedOperand(A.width, core), A.extra_lsb)
    return DlsbSum(result, result.value != A.value + B.value)


def dlsb_sub(A, B):
    """A - B as A + negate(B)."""
    return dlsb_add(A, dlsb_negate(B))


def dlsb_product(core_a, extra_a, core_b, extra_b, width):
    """Sophisticated DLSB multiplication on arrays.

    A' = A XOR a_{0+} (replicated), so A+ = (-1)^a_{0+} * A'. B is
    encoded with b_{-1} = b_{0+} and every digit sign becomes
    s_j XOR a_{0+}.
    """
    core_a, core_b = widen(core_a, width), widen(core_b, width)
    extra_a, extra_b = widen(extra_a, width), widen(extra_b, width)
    flipped = np.where(extra_a == 1, ~core_a, core_a)
    total = np.zeros(np.broadcast(core_a, core_b).shape, dtype=core_a.dtype)
    for j in range(width // 2):
        high = bit(core_b, 2 * j + 1)
        mid = bit(core_b, 2 * j)
        low = extra_b if j == 0 else bit(core_b, 2 * j - 1)
        one = low ^ mid
        two = (high ^ mid) & (1 - one)
        sign = high ^ extra_a
        row = flipped * (2 * two + one)
        total = total + (np.where(sign == 1, -row, row) << (2 * j))
    return total


def dlsb_product_straightforward(core_a, extra_a, core_b, extra_b, width):
    """core_A * B+ on a Booth multiplier plus the extra term a_{0+} * B+."""
    core_a, core_b = widen(core_a, width), widen(core_b, width)
    extra_a, extra_b = widen(extra_a, width), widen(extra_b, width)
    product = booth_rows(core_a, core_b, width, b_minus1=extra_b)
    return product + extra_a * (core_b + extra_b)


def _check_pair(A, B):
    if A.width != B.width:
        raise WidthError(f"operand widths differ: {A.width} != {B.width}")
    return A.width


def dlsb_multiply(A, B):
    """Exact product value(A) * value(B) on the sophisticated DLSB multiplier."""
    width = _check_pair(A, B)
    return int(dlsb_product(A.core.value, A.extra_lsb, B.core.value, B.extra_lsb, width))


def dlsb_multiply_straightforward(A, B):
    """Exact product value(A) * value(B) with the extra conventional term."""
    width = _check_pair(A, B)
    return int(dlsb_product_straightforward(
        A.core.value, A.extra_lsb, B.core.value, B.extra_lsb, width))


def partition_operand(X) -> Tuple[DlsbOperand, DlsbOperand]:
    """Split a 2n-bit operand into DLSB halves.

    The MSB of the low half, x_{n-1}, is attached as the extra LSB of the
    high half; the low half is read as signed with extra LSB 0, so
    hi+ * 2^n + lo+ = X.
    """
    half = X.width // 2
    check_width(half)
    high = DlsbOperand.of(half, X.value >> half, X.bit(half - 1))
    low = DlsbOperand.of(half, int(low_signed(X.value, half)), 0)
    return high, low


def partition_product(a, b, width):
    """Array form of partition_multiply for `width` = 2n."""
    check_width(width)
    half = width // 2
    check_width(half)
    a, b = as_words(a, width), as_words(b, width)
    a_hi, a_lo = widen(a >> half, half), widen(low_signed(a, half), half)
    b_hi, b_lo = widen(b >> half, half), widen(low_signed(b, half), half)
    a_x, b_x = widen(bit(a, half - 1), half), widen(bit(b, half - 1), half)
    zero = np.zeros_like(a_x)

    hh = widen(dlsb_product(a_hi, a_x, b_hi, b_x, half), width)
    hl = widen(dlsb_product(a_hi, a_x, b_lo, zero, half), width)
    lh = widen(dlsb_product(a_lo, zero, b_hi, b_x, half), width)
    ll = widen(dlsb_product(a_lo, zero, b_lo, zero, half), width)
    return (hh << width) + ((hl + lh) << half) + ll


def partition_multiply(A, B):
    """Exact 2n x 2n product assembled from four n-bit DLSB products."""
    width = _check_pair(A, B)
    return int(partition_product(A.value, B.value, width))
