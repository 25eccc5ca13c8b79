"""
Bit-accurate approximate multiplier laboratory. Models the radix-4
Modified Booth multiplier and its approximate relatives (high-radix
encoding, partial product perforation and rounding, DLSB arithmetic,
approximate floating-point units), measures their error and runs them
inside DSP kernels and a quantized convolutional network.

Copyright 2022, Blake Reid.
Licensed under MIT.

"""
import logging

from .errors import (
    AssignmentError,
    ConfigError,
    EnergyTableError,
    FpDomainError,
    InfeasibleTransitionError,
    MaskError,
    PgmFormatError,
    WidthError
    )
from .fixed_core import (
    FixedOperand,
    PartialProductTerm,
    Radix4Digit,
    booth_product,
    encode_radix4,
    multiply_accurate,
    oracle_multiply,
    partial_products,
    recompose,
    school_product
    )
from .dlsb import (
    DlsbOperand,
    DlsbSum,
    dlsb_add,
    dlsb_multiply,
    dlsb_multiply_straightforward,
    dlsb_negate,
    dlsb_sub,
    dlsb_value,
    partition_multiply,
    partition_operand
    )
from .approx_fixed import (
    Accurate,
    AxConfig,
    AxFxu,
    Drad,
    Dradp,
    DyFxu,
    DyMasks,
    HighRadixDigit,
    Perf,
    Rad,
    Radr,
    Roup1,
    Roup2,
    approx_high_radix_digit,
    decode_masks,
    dyfxu_masks,
    multiply_array,
    multiply_axfxu,
    multiply_dispatch,
    multiply_drad,
    multiply_dyfxu,
    multiply_perf,
    multiply_rad,
    multiply_radr,
    multiply_roup,
    parse_config,
    round_operand
    )
from .float_mul import (
    HALF,
    SINGLE,
    FpClass,
    FpDatum,
    FpFormat,
    FpProductVerdict,
    Verdict,
    check_significand_config,
    fp_classify,
    fp_masks,
    fp_multiply_accurate,
    fp_multiply_axfpu,
    fp_multiply_bits,
    fp_multiply_dyfpu
    )
from .error_lab import (
    ErrorSample,
    MetricsReport,
    SweepSpec,
    calibrate_correction,
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
from .dsp_kernels import (
    EdgeMap,
    GrayImage,
    Kernel2D,
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
from .net_approx import (
    AssignmentScheme,
    EnergyTable,
    QuantConvLayer,
    QuantNetwork,
    assign,
    conv_forward_quant,
    estimate_energy,
    forward,
    load_energy_table,
    load_network,
    save_network,
    toy_network
    )

logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = (
    "WidthError",
    "ConfigError",
    "MaskError",
    "FpDomainError",
    "PgmFormatError",
    "AssignmentError",
    "EnergyTableError",
    "InfeasibleTransitionError",
    "FixedOperand",
    "Radix4Digit",
    "PartialProductTerm",
    "encode_radix4",
    "recompose",
    "partial_products",
    "multiply_accurate",
    "oracle_multiply",
    "booth_product",
    "school_product",
    "DlsbOperand",
    "DlsbSum",
    "dlsb_value",
    "dlsb_negate",
    "dlsb_add",
    "dlsb_sub",
    "dlsb_multiply",
    "dlsb_multiply_straightforward",
    "partition_operand",
    "partition_multiply",
    "AxConfig",
    "Accurate",
    "Rad",
    "Perf",
    "AxFxu",
    "DyFxu",
    "Roup1",
    "Roup2",
    "Radr",
    "Drad",
    "Dradp",
    "HighRadixDigit",
    "DyMasks",
    "parse_config",
    "approx_high_radix_digit",
    "round_operand",
    "multiply_rad",
    "multiply_perf",
    "multiply_axfxu",
    "dyfxu_masks",
    "decode_masks",
    "multiply_dyfxu",
    "multiply_roup",
    "multiply_radr",
    "multiply_drad",
    "multiply_dispatch",
    "multiply_array",
    "FpFormat",
    "HALF",
    "SINGLE",
    "FpClass",
    "Verdict",
    "FpDatum",
    "FpProductVerdict",
    "fp_classify",
    "fp_multiply_bits",
    "fp_multiply_accurate",
    "fp_multiply_axfpu",
    "fp_masks",
    "fp_multiply_dyfpu",
    "check_significand_config",
    "red",
    "ErrorSample",
    "MetricsReport",
    "metrics",
    "metrics_from_arrays",
    "metrics_from_fp",
    "mred_rad_closed_form",
    "sample_uniform_fixed",
    "sample_uniform_fp_normal",
    "pareto_front",
    "SweepSpec",
    "run_sweep",
    "calibrate_correction",
    "red_histogram",
    "GrayImage",
    "Kernel2D",
    "EdgeMap",
    "conv2d",
    "winograd_conv3x3",
    "sobel",
    "cer",
    "fir",
    "matmul_tiled",
    "psnr",
    "ssim",
    "pgm_read",
    "pgm_write",
    "synthetic_scene",
    "textured_scene",
    "gaussian_blur",
    "QuantConvLayer",
    "QuantNetwork",
    "AssignmentScheme",
    "EnergyTable",
    "assign",
    "conv_forward_quant",
    "forward",
    "load_energy_table",
    "estimate_energy",
    "load_network",
    "save_network",
    "toy_network"
)
