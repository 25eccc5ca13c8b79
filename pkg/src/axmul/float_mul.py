"""
IEEE-754 style half and single precision data, the accurate
floating-point multiplier and its approximate variants.

AxFPU replaces the mantissa multiplier by an AxFXU and removes the
rounding unit; DyFPU drives the same datapath with runtime masks.
Only normal inputs are modeled. Results that leave the normal range
come back as overflow/underflow verdicts, never as denormals.
"""
import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .approx_fixed import AxFxu, DyFxu, DyMasks, decode_masks, dyfxu_masks, multiply_array
from .errors import ConfigError, FpDomainError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FpFormat:
    """Binary interchange format.

    Attributes:
        name (str): Short name.
        total_bits (int): Word size.
        exponent_bits (int): w.
        mantissa_bits (int): Stored fraction bits m - 1.
        bias (int): e_max.
        dtype (str): Matching numpy float type.
    """
    name: str
    total_bits: int
    exponent_bits: int
    mantissa_bits: int
    bias: int
    dtype: str

    @property
    def significand_bits(self):
        """m, the hidden one included."""
        return self.mantissa_bits + 1

    @property
    def engine_width(self):
        """Signed fixed-point width the significands are fed to.

        One zero bit above the significand, rounded up to an even width.
        """
        width = self.significand_bits + 1
        return width + width % 2

    @property
    def max_exponent(self):
        """Largest biased exponent of a normal number."""
        return (1 << self.exponent_bits) - 2

    @property
    def uint_dtype(self):
        return np.dtype(f"uint{self.total_bits}")

    def __str__(self):
        return self.name


HALF = FpFormat("half", 16, 5, 10, 15, "float16")
SINGLE = FpFormat("single", 32, 8, 23, 127, "float32")

FORMATS = {fmt.name: fmt for fmt in (HALF, SINGLE)}


def get_format(name):
    try:
        return FORMATS[str(name).lower()]
    except KeyError:
        raise FpDomainError(f"unknown floating-point format {name!r}") from None


class FpClass(enum.Enum):
    NORMAL = "normal"
    SUBNORMAL = "subnormal"
    ZERO = "zero"
    NAN = "nan"
    INF = "inf"


class Verdict(enum.IntEnum):
    """Outcome of a product before clamping."""
    NORMAL = 0
    OVERFLOW = 1
    UNDERFLOW = 2


@dataclass(frozen=True)
class FpDatum:
    """A floating-point word split into its fields.

    Attributes:
        sign (int): S.
        exponent (int): Biased exponent E.
        mantissa (int): Stored fraction M.
        fmt (FpFormat): Format of the word.
    """
    sign: int
    exponent: int
    mantissa: int
    fmt: FpFormat = HALF

    def __post_init__(self):
        if self.sign not in (0, 1):
            raise FpDomainError(f"sign must be 0 or 1, got {self.sign!r}")
        if not 0 <= self.exponent < (1 << self.fmt.exponent_bits):
            raise FpDomainError(f"exponent {self.exponent} does not fit {self.fmt}")
        if not 0 <= self.mantissa < (1 << self.fmt.mantissa_bits):
            raise FpDomainError(f"mantissa {self.mantissa} does not fit {self.fmt}")

    @classmethod
    def from_bits(cls, bits, fmt=HALF):
        bits = int(bits)
        if not 0 <= bits < (1 << fmt.total_bits):
            raise FpDomainError(f"{bits:#x} is not a {fmt.total_bits}-bit word")
        return cls(sign=bits >> (fmt.total_bits - 1),
                   exponent=(bits >> fmt.mantissa_bits) & ((1 << fmt.exponent_bits) - 1),
                   mantissa=bits & ((1 << fmt.mantissa_bits) - 1),
                   fmt=fmt)

    @classmethod
    def from_hex(cls, text, fmt=HALF):
        """Parse a hexadecimal bit pattern such as `0x3C00`."""
        try:
            bits = int(text, 16)
        except ValueError:
            raise FpDomainError(f"not a hexadecimal word: {text!r}") from None
        return cls.from_bits(bits, fmt)

    @classmethod
    def from_float(cls, value, fmt=HALF):
        """Round a Python float to the nearest value of `fmt`."""
        bits = np.asarray(value, dtype=fmt.dtype).view(fmt.uint_dtype)
        return cls.from_bits(int(bits), fmt)

    def to_bits(self):
        return ((self.sign << (self.fmt.total_bits - 1))
                | (self.exponent << self.fmt.mantissa_bits)
                | self.mantissa)

    def to_hex(self):
        return f"0x{self.to_bits():0{self.fmt.total_bits // 4}X}"

    def to_float(self):
        word = np.asarray(self.to_bits(), dtype=self.fmt.uint_dtype)
        return float(word.view(self.fmt.dtype))


class FpProductVerdict(NamedTuple):
    """A product datum, or an overflow/underflow flag.

    Attributes:
        verdict (Verdict): NORMAL when `datum` holds the product.
        sign (int): S_A XOR S_B, kept for every verdict.
        exponent (int): E_R before the range check.
        datum (FpDatum, optional): None unless the verdict is NORMAL.
    """
    verdict: Verdict
    sign: int
    exponent: int
    datum: Optional[FpDatum] = None

    @property
    def is_normal(self):
        return self.verdict is Verdict.NORMAL


def fp_classify(x, fmt=None):
    """Classify a datum by its exponent and mantissa fields."""
    fmt = fmt or x.fmt
    top = (1 << fmt.exponent_bits) - 1
    if x.exponent == 0:
        return FpClass.ZERO if x.mantissa == 0 else FpClass.SUBNORMAL
    if x.exponent == top:
        return FpClass.INF if x.mantissa == 0 else FpClass.NAN
    return FpClass.NORMAL


class FpFields(NamedTuple):
    sign: np.ndarray
    exponent: np.ndarray
    significand: np.ndarray


def split_bits(bits, fmt):
    """Split words into sign, biased exponent and significand (hidden one set).

    Raises:
        FpDomainError: A word is not a normal number.
    """
    words = np.asarray(bits, dtype=np.int64)
    exponent = (words >> fmt.mantissa_bits) & ((1 << fmt.exponent_bits) - 1)
    if words.size and (exponent.min() < 1 or exponent.max() > fmt.max_exponent):
        raise FpDomainError(f"only normal {fmt} inputs are modeled")
    sign = (words >> (fmt.total_bits - 1)) & 1
    significand = (words & ((1 << fmt.mantissa_bits) - 1)) | (1 << fmt.mantissa_bits)
    return FpFields(sign, exponent, significand)


class FpProducts(NamedTuple):
    """Array results of a floating-point multiplier.

    Attributes:
        bits (numpy.ndarray): Result words; overflow reads as a signed
            infinity, underflow as a signed zero.
        verdict (numpy.ndarray): Verdict codes.
        exponent (numpy.ndarray): E_R before the range check.
    """
    bits: np.ndarray
    verdict: np.ndarray
    exponent: np.ndarray


def _round_nearest_even(product, fmt):
    frac = fmt.mantissa_bits
    carry = product >> (2 * frac + 1)
    shift = frac + carry
    kept = product >> shift
    rest = product & ((1 << shift) - 1)
    half = 1 << (shift - 1)
    kept = kept + ((rest > half) | ((rest == half) & ((kept & 1) == 1)))
    renormalize = kept >> (frac + 1)
    return kept >> renormalize, carry + renormalize


def _truncate(product, fmt):
    """Normalize an approximate mantissa product without rounding.

    01.x keeps the exponent, 10.x and 11.x add one, exactly 100.0 adds
    two. 00.x cannot be normalized and is flagged.
    """
    frac = fmt.mantissa_bits
    one = 1 << (2 * frac)
    increment = np.select([product >= 4 * one, product >= 2 * one], [2, 1], default=0)
    kept = product >> (frac + increment)
    return kept, increment, product < one


def check_significand_config(cfg, fmt):
    """Validate a mantissa multiplier configuration for `fmt`.

    The configuration must be valid at the engine width. AxFXU and DyFXU
    settings are further bounded by the m-bit significand: P in
    [0, m/2 - 1) and R in [0, m - 1).

    Raises:
        ConfigError: A bound is violated.
        MaskError: DyFXU masks that are not canonical.
    """
    cfg.validate(fmt.engine_width)
    if isinstance(cfg, AxFxu):
        p, r = cfg.p, cfg.r
    elif isinstance(cfg, DyFxu):
        p, r = decode_masks(DyMasks(cfg.mask_a, cfg.mask_b, cfg.round_enable), fmt.engine_width)
    else:
        return
    m = fmt.significand_bits
    if 2 * p >= m - 2:
        raise ConfigError(f"p={p} outside [0, {m / 2 - 1:g}) for the {m}-bit {fmt} significand")
    if r >= m - 1:
        raise ConfigError(f"r={r} outside [0, {m - 1}) for the {m}-bit {fmt} significand")


def fp_multiply_bits(a_bits, b_bits, fmt, cfg=None):
    """Multiply arrays of normal words.

    Args:
        a_bits (array_like): Words of the first operand.
        b_bits (array_like): Words of the second operand.
        fmt (FpFormat): Format of both operands.
        cfg (AxConfig, optional): Mantissa multiplier configuration. The
            accurate datapath with round-to-nearest-even when omitted;
            otherwise the truncating approximate datapath.

    Returns:
        FpProducts: Result words, verdicts and pre-check exponents.

    Raises:
        FpDomainError: A non-normal input.
        ConfigError: `cfg` invalid for the significand (see
            check_significand_config).
    """
    a, b = split_bits(a_bits, fmt), split_bits(b_bits, fmt)
    sign = a.sign ^ b.sign
    exponent = a.exponent + b.exponent - fmt.bias
    if cfg is None:
        kept, increment = _round_nearest_even(a.significand * b.significand, fmt)
        unnormalized = np.zeros_like(kept, dtype=bool)
    else:
        check_significand_config(cfg, fmt)
        product = np.asarray(
            multiply_array(cfg, a.significand, b.significand, fmt.engine_width),
            dtype=np.int64)
        kept, increment, unnormalized = _truncate(product, fmt)
    exponent = exponent + increment
    mantissa = kept & ((1 << fmt.mantissa_bits) - 1)

    overflow = unnormalized | (exponent > fmt.max_exponent)
    underflow = ~overflow & (exponent < 1)
    verdict = np.select([overflow, underflow], [int(Verdict.OVERFLOW), int(Verdict.UNDERFLOW)],
                        default=int(Verdict.NORMAL)).astype(np.int64)
    field = np.select([overflow, underflow], [fmt.max_exponent + 1, 0], default=exponent)
    mantissa = np.where(overflow | underflow, 0, mantissa)
    bits = (sign << (fmt.total_bits - 1)) | (field << fmt.mantissa_bits) | mantissa
    return FpProducts(bits, verdict, exponent)


def _check_normal(*data):
    for x in data:
        kind = fp_classify(x)
        if kind is not FpClass.NORMAL:
            raise FpDomainError(f"{x.to_hex()} is {kind.value}; only normal inputs are modeled")


def _scalar_product(A, B, fmt, cfg):
    fmt = fmt or A.fmt
    if A.fmt != fmt or B.fmt != fmt:
        raise FpDomainError(f"operands are not both {fmt}")
    _check_normal(A, B)
    out = fp_multiply_bits([A.to_bits()], [B.to_bits()], fmt, cfg)
    verdict = Verdict(int(out.verdict[0]))
    sign = A.sign ^ B.sign
    exponent = int(out.exponent[0])
    if verdict is not Verdict.NORMAL:
        logger.debug("%s x %s -> %s", A.to_hex(), B.to_hex(), verdict.name.lower())
        return FpProductVerdict(verdict, sign, exponent)
    return FpProductVerdict(verdict, sign, exponent, FpDatum.from_bits(int(out.bits[0]), fmt))


def fp_multiply_accurate(A, B, fmt=None):
    """Accurate product with round-to-nearest-even."""
    return _scalar_product(A, B, fmt, None)


def fp_multiply_axfpu(A, B, fmt=None, p=0, r=0):
    """AxFPU product: AxFXU mantissa multiplier, truncated result."""
    return _scalar_product(A, B, fmt, AxFxu(p, r))


def fp_masks(fmt, p, r):
    """DyFPU masks encoding (P, R) over the significand engine width."""
    check_significand_config(AxFxu(p, r), fmt)
    return dyfxu_masks(p, r, fmt.engine_width)


def fp_multiply_dyfpu(A, B, fmt=None, mask_a=None, mask_b=None, round_enable=None):
    """DyFPU product with runtime masks.

    `mask_a` may also be a DyMasks triple, in which case `mask_b` and
    `round_enable` are taken from it.
    """
    fmt = fmt or A.fmt
    if isinstance(mask_a, DyMasks):
        mask_a, mask_b, round_enable = mask_a
    full = (1 << fmt.engine_width) - 1
    mask_a = full if mask_a is None else mask_a
    mask_b = full if mask_b is None else mask_b
    if round_enable is None:
        round_enable = int(mask_a != full)
    return _scalar_product(A, B, fmt, DyFxu(mask_a, mask_b, round_enable))


__all__ = [
    "FpFormat", "HALF", "SINGLE", "FORMATS", "get_format", "FpClass", "Verdict",
    "FpDatum", "FpProductVerdict", "FpProducts", "fp_classify", "split_bits",
    "fp_multiply_bits", "fp_multiply_accurate", "fp_multiply_axfpu", "fp_masks",
    "fp_multiply_dyfpu", "check_significand_config",
]
