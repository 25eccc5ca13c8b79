"""
Fixed-point approximate multipliers.

Families: RAD (approximate high-radix encoding of the LSBs of B),
PERF (partial product perforation), AxFXU (perforation plus symmetric
rounding of A), DyFXU (AxFXU selected at runtime by masks), ROUP1/ROUP2
(perforation plus asymmetric rounding), RADR (high-radix plus
asymmetric rounding) and DRAD/DRADP (high-radix encoding of both
operands). `multiply_dispatch` routes a configuration to its family.
"""
from dataclasses import MISSING, dataclass, fields
from typing import ClassVar, Dict, NamedTuple, Optional, Tuple

import numpy as np

from .errors import ConfigError, MaskError, WidthError
from .fixed_core import FixedOperand, booth_rows, radix4_digits
from .utils import as_words, bit, check_width, low_signed, trailing_zeros, widen


_FAMILIES: Dict[str, type] = {}


def _family(cls):
    _FAMILIES[cls.family] = cls
    return cls


@dataclass(frozen=True)
class AxConfig:
    """Base of the multiplier configuration union.

    Subclasses are frozen dataclasses named after their family; their
    text form is `family:key=value,...` (see `parse_config`).
    """
    family: ClassVar[str] = ""

    def validate(self, width):
        """Check the parameters against operand width n.

        Raises:
            ConfigError: A parameter is outside its bounds.
        """
        check_width(width)

    def __str__(self):
        parts = []
        for field in fields(self):
            value = getattr(self, field.name)
            if field.default is not MISSING and field.default == value:
                continue
            parts.append(f"{field.name}={_format_value(value)}")
        return self.family + (":" + ",".join(parts) if parts else "")


def _format_value(value):
    if isinstance(value, tuple):
        return "/".join(str(v) for v in value)
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return str(value)


def _check_radix(k, width, name="k"):
    if k % 2 or k < 4 or k > width - 2:
        raise ConfigError(f"{name}={k} must be even with 4 <= {name} <= {width - 2}")


def _check_perforation(p, width):
    if not 0 <= p < width // 2 - 1:
        raise ConfigError(f"p={p} outside [0, {width // 2 - 1})")


def _check_rounding(r, width):
    if not 0 <= r < width - 1:
        raise ConfigError(f"r={r} outside [0, {width - 1})")


def _check_truncation(first_column, r, width):
    if first_column + r > width + 1:
        raise ConfigError(
            f"r={r} truncates past column {width + 1} of a matrix starting at column {first_column}")


def _check_offset(name, offset):
    if offset not in (0, 1):
        raise ConfigError(f"{name}={offset} must be 0 (column C) or 1 (column C-1)")


@_family
@dataclass(frozen=True)
class Accurate(AxConfig):
    family: ClassVar[str] = "acc"


@_family
@dataclass(frozen=True)
class Rad(AxConfig):
    k: int
    family: ClassVar[str] = "rad"

    def validate(self, width):
        super().validate(width)
        _check_radix(self.k, width)


@_family
@dataclass(frozen=True)
class Perf(AxConfig):
    p: int
    family: ClassVar[str] = "perf"

    def validate(self, width):
        super().validate(width)
        _check_perforation(self.p, width)


@_family
@dataclass(frozen=True)
class AxFxu(AxConfig):
    """Perforation of P rows and rounding of A at R bits.

    `rounding="prose"` rounds at R-1 bits instead of R.
    """
    p: int
    r: int
    rounding: str = "formula"
    family: ClassVar[str] = "axfxu"

    def validate(self, width):
        super().validate(width)
        _check_perforation(self.p, width)
        _check_rounding(self.r, width)
        if self.rounding not in ("formula", "prose"):
            raise ConfigError(f"unknown rounding {self.rounding!r}")


@_family
@dataclass(frozen=True)
class DyFxu(AxConfig):
    mask_a: int
    mask_b: int
    round_enable: int = 0
    family: ClassVar[str] = "dyfxu"

    def validate(self, width):
        super().validate(width)
        decode_masks(DyMasks(self.mask_a, self.mask_b, self.round_enable), width)

    def __str__(self):
        return (f"{self.family}:mask_a={self.mask_a:#x},mask_b={self.mask_b:#x},"
                f"round_enable={int(self.round_enable)}")


@_family
@dataclass(frozen=True)
class Roup1(AxConfig):
    """Perforation of P rows, the R lowest columns of what is left truncated.

    The remaining matrix starts at column 2P, so the cut sits at
    C = 2P + R and may not pass column n + 1. `corr` and `const` place
    the per-row correction and the constant at column C-1 (1) or C (0).
    """
    p: int
    r: int
    corr: int = 1
    const: int = 1
    family: ClassVar[str] = "roup1"

    def validate(self, width):
        super().validate(width)
        _check_perforation(self.p, width)
        _check_rounding(self.r, width)
        _check_truncation(2 * self.p, self.r, width)
        _check_offset("corr", self.corr)
        _check_offset("const", self.const)


@_family
@dataclass(frozen=True)
class Roup2(AxConfig):
    """Perforation of P rows, row j multiplies A rounded at R_j bits.

    Without an explicit schedule R_j = max(R - 2(j - P), 0).
    """
    p: int
    r: int
    schedule: Optional[Tuple[int, ...]] = None
    family: ClassVar[str] = "roup2"

    def validate(self, width):
        super().validate(width)
        _check_perforation(self.p, width)
        _check_rounding(self.r, width)
        if self.schedule is not None:
            if len(self.schedule) != width // 2 - self.p:
                raise ConfigError(
                    f"schedule needs {width // 2 - self.p} entries, got {len(self.schedule)}")
            for r in self.schedule:
                _check_rounding(r, width)

    def row_rounding(self, width):
        """R_j for the non-perforated rows j = P .. n/2-1."""
        if self.schedule is not None:
            return tuple(self.schedule)
        return tuple(max(self.r - 2 * (j - self.p), 0) for j in range(self.p, width // 2))


@_family
@dataclass(frozen=True)
class Radr(AxConfig):
    """RAD with the R lowest columns of the A*B1 sub-matrix truncated (cut at k + R)."""
    k: int
    r: int
    corr: int = 1
    const: int = 1
    family: ClassVar[str] = "radr"

    def validate(self, width):
        super().validate(width)
        _check_radix(self.k, width)
        _check_rounding(self.r, width)
        _check_truncation(self.k, self.r, width)
        _check_offset("corr", self.corr)
        _check_offset("const", self.const)


@_family
@dataclass(frozen=True)
class Drad(AxConfig):
    k: int
    m: int
    family: ClassVar[str] = "drad"

    def validate(self, width):
        super().validate(width)
        _check_radix(self.k, width)
        _check_radix(self.m, width, "m")


@_family
@dataclass(frozen=True)
class Dradp(Drad):
    family: ClassVar[str] = "dradp"


def parse_config(text):
    """Parse the text form of a configuration.

    Examples: `acc`, `rad:k=6`, `axfxu:p=2,r=4`, `roup2:p=3,r=10`,
    `roup2:p=3,r=10,schedule=10/8/6/4/2`, `dyfxu:mask_a=0xfff8,mask_b=0xfff8,round_enable=1`.

    Raises:
        ConfigError: Unknown family, key or malformed value.
    """
    text = text.strip()
    family, _, body = text.partition(":")
    try:
        cls = _FAMILIES[family.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown multiplier family in {text!r}") from None

    known = {field.name: field for field in fields(cls)}
    kwargs = {}
    for item in filter(None, (part.strip() for part in body.split(","))):
        key, sep, raw = item.partition("=")
        key = key.strip().lower()
        if not sep or key not in known:
            raise ConfigError(f"bad parameter {item!r} in {text!r}")
        raw = raw.strip()
        try:
            if key == "schedule":
                kwargs[key] = tuple(int(v) for v in raw.split("/"))
            elif key == "rounding":
                kwargs[key] = raw
            else:
                kwargs[key] = int(raw, 0)
        except ValueError:
            raise ConfigError(f"bad value {raw!r} for {key} in {text!r}") from None
    try:
        return cls(**kwargs)
    except TypeError:
        raise ConfigError(f"missing parameters in {text!r}") from None


# High-radix digit


@dataclass(frozen=True)
class HighRadixDigit:
    """Accurate radix-2^k digit y0 and its approximation.

    Attributes:
        k (int): Radix exponent.
        accurate (int): y0 in [-2^(k-1), 2^(k-1) - 1].
        approx (int): y0 mapped to {0, +-2^(k-4), ..., +-2^(k-1)}.
        sign (int): Sign signal.
        signals (tuple): (x2^(k-1), x2^(k-2), x2^(k-3), x2^(k-4)).
    """
    k: int
    accurate: int
    approx: int
    sign: int
    signals: Tuple[int, int, int, int]

    @property
    def signal_value(self):
        """Value selected by the encoding signals."""
        magnitude = sum(s << (self.k - 1 - i) for i, s in enumerate(self.signals))
        return -magnitude if self.sign else magnitude


def rad_digit_values(y, k):
    """Map accurate digits to approximate ones by interval.

    Bounds are compared on 2y so the half-integer bounds of k=4 are exact.
    """
    t = 1 << (k - 4)
    doubled = 2 * y
    conditions = [
        doubled < -12 * t,
        doubled < -6 * t,
        doubled < -3 * t,
        doubled < -t,
        doubled < t,
        doubled < 3 * t,
        doubled < 6 * t,
        doubled < 12 * t,
    ]
    choices = [-8 * t, -4 * t, -2 * t, -t, 0, t, 2 * t, 4 * t]
    return np.select(conditions, choices, default=8 * t)


def rad_signals(y, k):
    """Encoding signals of the approximate radix-2^k digit.

    Returns:
        tuple: sign, x2^(k-1), x2^(k-2), x2^(k-3), x2^(k-4) arrays.
    """
    b1, b2, b3, b4 = (bit(y, k - i) for i in range(1, 5))
    b5 = bit(y, k - 5)
    n1, n2, n3, n4, n5 = (1 - b for b in (b1, b2, b3, b4, b5))

    x4 = (n1 & n2 & n3 | b1 & b2 & b3) & (b4 ^ b5)
    x3 = n1 & n2 & (n3 & b4 & b5 | b3 & n4) | b1 & b2 & (b3 & n4 & n5 | n3 & b4)
    x2 = n2 & b3 & (b1 | b4) | b2 & n3 & (n1 | n4)
    x1 = n1 & b2 & b3 | b1 & n2 & n3
    return b1, x1, x2, x3, x4


def approx_high_radix_digit(y, k):
    """Approximate radix-2^k encoding of one digit.

    Args:
        y (int): Accurate digit.
        k (int): Even radix exponent, k >= 4.

    Raises:
        ConfigError: Odd or too small k.
        ValueError: y outside [-2^(k-1), 2^(k-1) - 1].
    """
    if k % 2 or k < 4:
        raise ConfigError(f"k={k} must be even and >= 4")
    if not -(1 << (k - 1)) <= y < (1 << (k - 1)):
        raise ValueError(f"digit {y} outside the radix-2^{k} range")
    word = np.asarray(y, dtype=object if k > 60 else np.int64)
    sign, *signals = (int(s) for s in rad_signals(word, k))
    return HighRadixDigit(k=k, accurate=int(y), approx=int(rad_digit_values(word, k)),
                          sign=sign, signals=tuple(signals))


def rad_operand(b, width, k):
    """B~ = B1 + y0^ and the split parts (B1, y0, y0^)."""
    y0 = low_signed(b, k)
    approx = rad_digit_values(y0, k).astype(b.dtype)
    high = b - y0
    return high + approx, high, y0, approx


# Array kernels. Operands are validated words of `width` bits.


def round_words(a, r):
    """2^r * (asr(A, r) + a_{r-1}); identity for r = 0."""
    if r <= 0:
        return a
    return ((a >> r) + bit(a, r - 1)) << r


def rad_product(a, b, width, k):
    """sum_{j>=k/2} 4^j A y_j + A y0^."""
    _, _, _, approx = rad_operand(b, width, k)
    return booth_rows(a, b, width, first=k // 2) + a * approx


def axfxu_product(a, b, width, p, r, rounding="formula"):
    """sum_{j>=P} 4^j A_R y_j."""
    if rounding == "prose":
        r = max(r - 1, 0)
    return booth_rows(round_words(a, r), b, width, first=p)


def roup2_product(a, b, width, p, schedule):
    digits = radix4_digits(b, width)
    total = np.zeros(np.broadcast(a, b).shape, dtype=a.dtype)
    for j, r in zip(range(p, width // 2), schedule):
        total = total + ((round_words(a, r) * digits[j]) << (2 * j))
    return total


def truncated_rows(a, b, width, first, r, corr=1, const=1):
    """Rows j >= first with the R lowest columns of their sub-matrix truncated.

    The sub-matrix starts at column 2*first, so everything below column
    C = 2*first + R is dropped. A negative row is the one's complement of
    A|y_j| plus a 1 at its LSB column; both the dropped bits and those 1s
    are lost. A nonzero row that loses bits gains 2^(C-corr); the constant
    2^(C-const) is added once when R > 0.
    """
    digits = radix4_digits(b, width)
    total = np.zeros(np.broadcast(a, b).shape, dtype=a.dtype)
    cut = 2 * first + r
    for j in range(first, width // 2):
        digit = digits[j]
        column = 2 * j
        if column >= cut:
            total = total + ((a * digit) << column)
            continue
        magnitude = a * np.abs(digit)
        pattern = np.where(digit < 0, -magnitude - 1, magnitude)
        kept = ((pattern << column) >> cut) << cut
        correction = np.where(digit != 0, 1 << (cut - corr), 0)
        total = total + kept + correction
    if r > 0:
        total = total + (1 << (cut - const))
    return total


def roup1_product(a, b, width, p, r, corr=1, const=1):
    return truncated_rows(a, b, width, p, r, corr, const)


def radr_product(a, b, width, k, r, corr=1, const=1):
    _, _, _, approx = rad_operand(b, width, k)
    return truncated_rows(a, b, width, k // 2, r, corr, const) + a * approx


def drad_product(a, b, width, k, m, perforate=False):
    """A1*B1 + B1*x0^ + A*y0^, dropping A*y0^ when perforating."""
    _, b_high, _, y_approx = rad_operand(b, width, k)
    _, a_high, _, x_approx = rad_operand(a, width, m)
    product = a_high * b_high + b_high * x_approx
    if not perforate:
        product = product + a * y_approx
    return product


# Runtime masks


class DyMasks(NamedTuple):
    """Runtime configuration of DyFXU.

    Attributes:
        mask_a (int): Clears the R-1 LSBs of A.
        mask_b (int): Clears the 2P-1 LSBs of B.
        round_enable (int): 1 when the surviving LSB of A is a rounding bit.
    """
    mask_a: int
    mask_b: int
    round_enable: int


def _low_run_mask(cleared, width):
    return ((1 << width) - 1) ^ ((1 << cleared) - 1)


def dyfxu_masks(p, r, width):
    """Masks encoding the AxFXU configuration (P, R)."""
    AxFxu(p, r).validate(width)
    return DyMasks(mask_a=_low_run_mask(max(r - 1, 0), width),
                   mask_b=_low_run_mask(max(2 * p - 1, 0), width),
                   round_enable=int(r >= 1))


def _cleared_bits(mask, width, name):
    full = (1 << width) - 1
    if mask & ~full or mask == 0:
        raise MaskError(f"{name}={mask:#x} is not a {width}-bit mask")
    cleared = trailing_zeros(mask)
    if mask != _low_run_mask(cleared, width):
        raise MaskError(f"{name}={mask:#x} is not a canonical low-run mask")
    return cleared


def decode_masks(masks, width):
    """Recover (P, R) from canonical masks.

    Raises:
        MaskError: Masks are not of the low-run form, maskB clears an even
            number of bits, or A bits are cleared without rounding.
    """
    check_width(width)
    cleared_a = _cleared_bits(masks.mask_a, width, "mask_a")
    cleared_b = _cleared_bits(masks.mask_b, width, "mask_b")
    if cleared_b and cleared_b % 2 == 0:
        raise MaskError(f"mask_b clears {cleared_b} bits; perforation clears 2P-1")
    if masks.round_enable not in (0, 1):
        raise MaskError("round_enable must be 0 or 1")
    if cleared_a and not masks.round_enable:
        raise MaskError("mask_a clears bits while rounding is disabled")
    p = (cleared_b + 1) // 2
    r = cleared_a + 1 if masks.round_enable else 0
    AxFxu(p, r).validate(width)
    return p, r


def dyfxu_product(a, b, width, masks):
    """Product through the masked datapath.

    Rows whose b_{2j} input is masked are gated; A is read through its
    mask and the surviving rounding bit a_{R-1} adds 2^(R-1).
    """
    p, r = decode_masks(masks, width)
    masked_a = _apply_mask(a, masks.mask_a, width)
    masked_b = _apply_mask(b, masks.mask_b, width)
    if masks.round_enable:
        masked_a = masked_a + (bit(masked_a, r - 1) << (r - 1))
    digits = radix4_digits(masked_b, width)
    total = np.zeros(np.broadcast(a, b).shape, dtype=a.dtype)
    for j in range(width // 2):
        if not (masks.mask_b >> (2 * j)) & 1:
            continue
        total = total + ((masked_a * digits[j]) << (2 * j))
    return total


def _apply_mask(values, mask, width):
    return low_signed(values & mask, width)


# Dispatch


def multiply_array(cfg, a, b, width):
    """Route a configuration to its family on arrays of `width`-bit words.

    Raises:
        WidthError: Operand values do not fit `width`.
        ConfigError: Parameters invalid for `width`.
    """
    cfg.validate(width)
    a, b = as_words(a, width), as_words(b, width)
    if isinstance(cfg, Accurate):
        return booth_rows(a, b, width)
    if isinstance(cfg, Rad):
        return rad_product(a, b, width, cfg.k)
    if isinstance(cfg, Perf):
        return axfxu_product(a, b, width, cfg.p, 0)
    if isinstance(cfg, AxFxu):
        return axfxu_product(a, b, width, cfg.p, cfg.r, cfg.rounding)
    if isinstance(cfg, DyFxu):
        return dyfxu_product(a, b, width, DyMasks(cfg.mask_a, cfg.mask_b, cfg.round_enable))
    if isinstance(cfg, Roup1):
        return roup1_product(a, b, width, cfg.p, cfg.r, cfg.corr, cfg.const)
    if isinstance(cfg, Roup2):
        return roup2_product(a, b, width, cfg.p, cfg.row_rounding(width))
    if isinstance(cfg, Radr):
        return radr_product(a, b, width, cfg.k, cfg.r, cfg.corr, cfg.const)
    if isinstance(cfg, Drad):
        return drad_product(a, b, width, cfg.k, cfg.m, perforate=isinstance(cfg, Dradp))
    raise ConfigError(f"no multiplier for {cfg!r}")


# Operand-level API


def _check_pair(A, B):
    if A.width != B.width:
        raise WidthError(f"operand widths differ: {A.width} != {B.width}")
    return A.width


def multiply_dispatch(cfg, A, B):
    """Approximate product of two FixedOperands under `cfg`."""
    width = _check_pair(A, B)
    return int(multiply_array(cfg, A.value, B.value, width))


def round_operand(A, r):
    """A_R = 2^r * (asr(A, r) + a_{r-1}) in DLSB form (may reach 2^(n-1))."""
    if not 0 <= r < A.width:
        raise ConfigError(f"r={r} outside [0, {A.width})")
    return int(round_words(widen(A.value, A.width), r))


def multiply_rad(A, B, k):
    return multiply_dispatch(Rad(k), A, B)


def multiply_perf(A, B, p):
    return multiply_dispatch(Perf(p), A, B)


def multiply_axfxu(A, B, p, r, rounding="formula"):
    return multiply_dispatch(AxFxu(p, r, rounding), A, B)


def multiply_dyfxu(A, B, mask_a, mask_b, round_enable=None):
    """DyFXU product; `round_enable` defaults to whether mask_a clears any bit."""
    if round_enable is None:
        round_enable = int(mask_a != (1 << A.width) - 1)
    return multiply_dispatch(DyFxu(mask_a, mask_b, round_enable), A, B)


def multiply_roup(A, B, variant, p, r, schedule=None, corr=1, const=1):
    """ROUP1 (variant 1) or ROUP2 (variant 2) product."""
    if variant == 1:
        cfg = Roup1(p, r, corr, const)
    elif variant == 2:
        cfg = Roup2(p, r, None if schedule is None else tuple(schedule))
    else:
        raise ConfigError(f"ROUP variant must be 1 or 2, got {variant!r}")
    return multiply_dispatch(cfg, A, B)


def multiply_radr(A, B, k, r, corr=1, const=1):
    return multiply_dispatch(Radr(k, r, corr, const), A, B)


def multiply_drad(A, B, k, m, perforate=False):
    return multiply_dispatch(Dradp(k, m) if perforate else Drad(k, m), A, B)


def is_extreme(cfg, width):
    """Configurations at the perforation limit with near-maximal rounding."""
    p = getattr(cfg, "p", None)
    r = getattr(cfg, "r", 0)
    return p is not None and p == width // 2 - 2 and r >= width - 3


__all__ = [
    "AxConfig", "Accurate", "Rad", "Perf", "AxFxu", "DyFxu", "Roup1", "Roup2",
    "Radr", "Drad", "Dradp", "HighRadixDigit", "DyMasks", "parse_config",
    "approx_high_radix_digit", "round_operand", "multiply_rad", "multiply_perf",
    "multiply_axfxu", "dyfxu_masks", "decode_masks", "multiply_dyfxu",
    "multiply_roup", "multiply_radr", "multiply_drad", "multiply_dispatch",
    "multiply_array", "is_extreme", "FixedOperand",
]
