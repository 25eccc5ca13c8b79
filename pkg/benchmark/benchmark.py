import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from benchmark.oracle import SUITES, run_suites
from benchmark.sweep_benchmark import SweepBenchmark
from benchmark.visualization import build_dataframe, percent, write_frame
from src.axmul.approx_fixed import Accurate, AxFxu, Perf, parse_config
from src.axmul.dsp_kernels import (
    BLUR_PRESETS,
    ENCODED_OPERANDS,
    GrayImage,
    cer,
    fir,
    gaussian_blur,
    hamming_sinc_taps,
    matmul_batch,
    pgm_read,
    pgm_write,
    psnr,
    random_signal,
    random_tiles,
    sobel,
    ssim,
    synthetic_scene
    )
from src.axmul.error_lab import (
    DEFAULT_THRESHOLDS,
    SAMPLERS,
    SweepSpec,
    metrics_from_arrays,
    pareto_indices
    )
from src.axmul.errors import (
    AssignmentError,
    ConfigError,
    EnergyTableError,
    FpDomainError,
    InfeasibleTransitionError,
    MaskError,
    PgmFormatError,
    WidthError
    )
from src.axmul.float_mul import FORMATS, get_format
from src.axmul.net_approx import (
    AssignmentScheme,
    estimate_energy,
    evaluate_scheme,
    load_energy_table,
    load_network,
    toy_inputs,
    toy_network
    )


logger = logging.getLogger("benchmark")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

DEFAULT_SWEEP = ("acc", "rad:k=6", "rad:k=8", "rad:k=10", "axfxu:p=2,r=4", "axfxu:p=4,r=6")
DEFAULT_EDGE_CONFIGS = ("rad:k=6", "rad:k=8", "rad:k=10")
DEFAULT_FIR_CONFIGS = ("rad:k=6", "rad:k=8", "rad:k=10", "axfxu:p=2,r=4", "axfxu:p=4,r=6")
DEFAULT_NET_CONFIGS = ("acc", "rad:k=6", "rad:k=8")

# Invalid input the user can correct; everything else raised by a run is a failure.
USAGE_ERRORS = (ConfigError, WidthError, MaskError, FpDomainError, PgmFormatError,
                AssignmentError, EnergyTableError)
RUN_ERRORS = (OSError, OverflowError, ValueError, InfeasibleTransitionError)


@dataclass
class RunConfig:
    """Settings of one invocation.

    Defaults, then the --config JSON file, then explicit flags.
    """
    command: str
    cfg: List[str] = field(default_factory=list)
    n: int = 16
    format: Optional[str] = None
    sampler: Optional[str] = None
    samples: int = 200_000
    seed: int = 1
    out: Optional[str] = None
    threads: Optional[int] = None
    thresholds: List[int] = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    verbose: int = 0
    kernel: Optional[str] = None
    input: Optional[str] = None
    threshold: int = 128
    save_dir: Optional[str] = None
    suite: str = "all"
    inject_fault: bool = False
    error_column: str = "mred"
    cost_column: str = "cost_units"
    energy_table: Optional[str] = None
    network: Optional[str] = None
    scheme: List[str] = field(default_factory=list)
    images: int = 4
    encode: str = "data"
    partition_samples: int = 1_000_000

    def __post_init__(self):
        if isinstance(self.cfg, str):
            self.cfg = [self.cfg]
        if isinstance(self.scheme, str):
            self.scheme = [self.scheme]
        if self.samples < 1:
            raise ConfigError(f"samples must be positive, got {self.samples}")
        if self.partition_samples < 1:
            raise ConfigError(f"partition_samples must be positive, got {self.partition_samples}")
        if self.encode not in ENCODED_OPERANDS:
            raise ConfigError(f"encode must be one of {ENCODED_OPERANDS}, got {self.encode!r}")

    @property
    def log_level(self):
        return LOG_LEVELS[min(max(self.verbose, 0), len(LOG_LEVELS) - 1)]


def initialize_parser() -> argparse.ArgumentParser:
    """Initialize parser object.

    Returns:
        argparse.ArgumentParser: Argument Parser.
    """
    parser = argparse.ArgumentParser(
                    prog = 'axmul',
                    description = 'approximate multiplier laboratory',
                    argument_default = argparse.SUPPRESS)
    return parser


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--verbose", "-v", action="count",
                        help="more logging on stderr; repeat for debug output.")
    common.add_argument("--seed", type=int, help="generator seed. default: 1.")
    common.add_argument("--samples", type=int, help="random sample count. default: 200000.")
    common.add_argument("--config", help="JSON file of settings; flags override it.")
    common.add_argument("--out", "-o", help="output CSV. default: stdout.")
    common.add_argument("--threads", type=int, help="worker threads. default: AXMUL_THREADS.")
    return common


def parser_add_args(parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    common = _common_options()
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", parents=[common], argument_default=argparse.SUPPRESS,
                                help="error metrics of multiplier configurations.")
    sweep.add_argument(
        "--cfg", "-c",
        action='append',
        help='configuration text, repeatable. example: axfxu:p=2,r=4.'
    )
    sweep.add_argument("--n", type=int, help="operand width. default: 16.")
    sweep.add_argument("--format", "-f", choices=sorted(FORMATS),
                       help="floating-point format; selects the normal-operand sampler.")
    sweep.add_argument("--sampler", choices=SAMPLERS)
    sweep.add_argument("--exhaustive-b", dest="sampler", action="store_const",
                       const="exhaustive-b", help="every B with A = 1.")
    sweep.add_argument("--thresholds", type=int, nargs="+", help="PRED thresholds in percent.")

    kernel = commands.add_parser("kernel", parents=[common], argument_default=argparse.SUPPRESS,
                                 help="run a DSP kernel under each configuration.")
    kernel.add_argument("kernel", choices=sorted(KERNELS))
    kernel.add_argument("--input", "-i", help="PGM image, or headerless CSV signal for fir.")
    kernel.add_argument("--cfg", "-c", action="append", help="configuration text or blur preset.")
    kernel.add_argument("--n", type=int, help="operand width. default: 16.")
    kernel.add_argument("--format", "-f", choices=sorted(FORMATS), help="blur precision.")
    kernel.add_argument("--threshold", type=int, help="Sobel edge threshold. default: 128.")
    kernel.add_argument("--save-dir", help="directory for output rasters.")
    kernel.add_argument("--encode", choices=ENCODED_OPERANDS,
                        help="operand the multiplier encodes: data or coefficient. default: data.")

    oracle = commands.add_parser("oracle", parents=[common], argument_default=argparse.SUPPRESS,
                                 help="bit-exact self checks.")
    oracle.add_argument("suite", nargs="?", default="all", choices=sorted(SUITES) + ["all"])
    oracle.add_argument("--inject-fault", action="store_true",
                        help="flip a DyFXU mask bit; the dyfxu and dyfpu suites must fail.")
    oracle.add_argument("--partition-samples", type=int,
                        help="pairs of the partition check. default: 1000000.")

    pareto = commands.add_parser("pareto", parents=[common], argument_default=argparse.SUPPRESS,
                                 help="non-dominated rows of an (error, cost) table.")
    pareto.add_argument("--input", "-i", required=True, help="CSV with error and cost columns.")
    pareto.add_argument("--error-column", help="default: mred.")
    pareto.add_argument("--cost-column", help="default: cost_units.")
    pareto.add_argument("--energy-table", help="join costs by config when the CSV has none.")

    net = commands.add_parser("net", parents=[common], argument_default=argparse.SUPPRESS,
                              help="accuracy and energy of network assignment schemes.")
    net.add_argument("--network", help=".axnet file. default: the seeded toy network.")
    net.add_argument("--scheme", action="append", help="scheme JSON file, repeatable.")
    net.add_argument("--cfg", "-c", action="append", help="uniform scheme of one configuration.")
    net.add_argument("--energy-table", help="energy CSV. default: the bundled table.")
    net.add_argument("--images", type=int, help="input images. default: 4.")

    return parser


def _load_settings(path):
    try:
        with open(path) as handle:
            settings = json.load(handle)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    if not isinstance(settings, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)} - {"command"}
    settings = {key.replace("-", "_"): value for key, value in settings.items()}
    unknown = sorted(set(settings) - known)
    if unknown:
        raise ConfigError(f"unknown settings in {path}: {', '.join(unknown)}")
    return settings


def process_args(parser: argparse.ArgumentParser, argv=None):
    """Process command-line arguments.

    Args:
        parser (argparse.ArgumentParser): Argument Parser.
        argv (list, optional): Arguments. Defaults to sys.argv[1:].

    Returns:
        RunConfig: Merged settings.
    """
    args = vars(parser.parse_args(argv))
    settings = {}
    config_path = args.pop("config", None)
    if config_path:
        settings.update(_load_settings(config_path))
    settings.update(args)
    return RunConfig(**settings)


def _configs(config, defaults):
    return [parse_config(text) for text in (config.cfg or defaults)]


def _slug(cfg):
    return "".join(ch if ch.isalnum() else "_" for ch in str(cfg))


def run_sweep(config):
    fmt = get_format(config.format) if config.format else None
    sampler = config.sampler or ("uniform-normal-fp" if fmt else "uniform-fixed")
    spec = SweepSpec(configs=tuple(config.cfg or DEFAULT_SWEEP), width=config.n, fmt=fmt,
                     sampler=sampler, samples=config.samples, seed=config.seed,
                     thresholds=tuple(config.thresholds))
    sweep = SweepBenchmark(spec, config.threads).compile()
    write_frame(build_dataframe(sweep), config.out)
    return EXIT_OK


def _image(config):
    return pgm_read(config.input) if config.input else synthetic_scene()


def sobel_rows(config):
    image = _image(config)
    reference = sobel(image, None, config.threshold, config.n, config.encode)
    rows = []
    for cfg in _configs(config, DEFAULT_EDGE_CONFIGS):
        edges = sobel(image, cfg, config.threshold, config.n, config.encode)
        rows.append({"kernel": "sobel", "config": str(cfg), "cer": cer(edges, reference)})
        if config.save_dir:
            pgm_write(Path(config.save_dir) / f"sobel_{_slug(cfg)}.pgm",
                      GrayImage(edges.edges.astype(np.uint8) * 255))
    return rows


def _blur_setting(text):
    if text in BLUR_PRESETS:
        return text, BLUR_PRESETS[text]
    cfg = parse_config(text)
    if isinstance(cfg, Accurate):
        return str(cfg), None
    if isinstance(cfg, AxFxu):
        return str(cfg), (cfg.p, cfg.r)
    if isinstance(cfg, Perf):
        return str(cfg), (cfg.p, 0)
    raise ConfigError(f"blur runs accurate or AxFPU multipliers, not {cfg}")


def blur_rows(config):
    image = _image(config)
    fmt = get_format(config.format or "single")
    reference = gaussian_blur(image, fmt)
    rows = []
    for name, setting in (_blur_setting(text) for text in (config.cfg or BLUR_PRESETS)):
        blurred = reference if setting is None else gaussian_blur(image, fmt, *setting)
        rows.append({"kernel": "blur", "config": name, "format": fmt.name,
                     "psnr": psnr(reference, blurred), "ssim": ssim(reference, blurred)})
        if config.save_dir:
            pgm_write(Path(config.save_dir) / f"blur_{_slug(name)}.pgm", blurred)
    return rows


def _signal(config):
    if config.input:
        return pd.read_csv(config.input, header=None).iloc[:, 0].to_numpy(dtype=np.int64)
    return random_signal(config.samples, config.seed, config.n)


def fir_rows(config):
    signal = _signal(config)
    taps = hamming_sinc_taps(bits=config.n)
    reference = fir(signal, taps, None, config.n, encode=config.encode)
    rows = []
    for cfg in _configs(config, DEFAULT_FIR_CONFIGS):
        filtered = fir(signal, taps, cfg, config.n, encode=config.encode)
        report = metrics_from_arrays(reference.output, filtered.output)
        rows.append({"kernel": "fir", "config": str(cfg), "mred_pct": percent(report.mred),
                     "mred": float(report.mred), "overflow": filtered.overflow})
    return rows


def matmul_rows(config):
    left, right = random_tiles(config.samples, config.seed, config.n)
    reference = matmul_batch(left, right, None, config.n)
    rows = []
    for cfg in _configs(config, DEFAULT_FIR_CONFIGS):
        report = metrics_from_arrays(reference, matmul_batch(left, right, cfg, config.n))
        rows.append({"kernel": "matmul", "config": str(cfg), "mred_pct": percent(report.mred),
                     "mred": float(report.mred)})
    return rows


KERNELS = {
    "sobel": sobel_rows,
    "blur": blur_rows,
    "fir": fir_rows,
    "matmul": matmul_rows,
}


def run_kernel(config):
    if config.save_dir:
        Path(config.save_dir).mkdir(parents=True, exist_ok=True)
    write_frame(pd.DataFrame(KERNELS[config.kernel](config)), config.out)
    return EXIT_OK


def run_oracle(config):
    results = run_suites(config.suite, seed=config.seed,
                         partition_samples=config.partition_samples,
                         inject_fault=config.inject_fault)
    frame = pd.DataFrame([{"suite": r.suite, "checked": r.checked, "failures": r.failures,
                           "passed": r.passed} for r in results])
    write_frame(frame, config.out)
    failed = [r.suite for r in results if not r.passed]
    if failed:
        logger.error("oracle failed: %s", ", ".join(failed))
        return EXIT_FAILURE
    return EXIT_OK


def run_pareto(config):
    frame = pd.read_csv(config.input)
    if config.cost_column not in frame.columns and config.energy_table and "config" in frame:
        table = load_energy_table(config.energy_table)
        frame[config.cost_column] = [table.cost(text) for text in frame["config"]]
    missing = [c for c in (config.error_column, config.cost_column) if c not in frame.columns]
    if missing:
        raise ConfigError(f"{config.input} lacks columns {', '.join(missing)}")
    points = list(zip(frame[config.error_column].astype(float),
                      frame[config.cost_column].astype(float)))
    write_frame(frame.iloc[pareto_indices(points)], config.out)
    return EXIT_OK


def _schemes(config, network):
    schemes = []
    for path in config.scheme:
        try:
            with open(path) as handle:
                schemes.append(AssignmentScheme.from_dict(json.load(handle)))
        except json.JSONDecodeError as err:
            raise ConfigError(f"cannot read scheme {path}: {err}") from None
    if config.cfg or not schemes:
        schemes.extend(AssignmentScheme.uniform(text, len(network.layers))
                       for text in (config.cfg or DEFAULT_NET_CONFIGS))
    return schemes


def run_net(config):
    network = load_network(config.network) if config.network else toy_network(config.seed)
    table = load_energy_table(config.energy_table)
    inputs = toy_inputs(network, config.images, config.seed)
    baseline = estimate_energy(network, AssignmentScheme.uniform(Accurate(), len(network.layers)),
                               table).total
    rows = []
    for scheme in _schemes(config, network):
        proxy, energy = evaluate_scheme(network, scheme, inputs, table)
        rows.append({"scheme": scheme.name, "granularity": scheme.granularity,
                     "accuracy": proxy, "energy_units": energy,
                     "saving_pct": percent(1 - energy / baseline)})
    write_frame(pd.DataFrame(rows), config.out)
    return EXIT_OK


COMMANDS = {
    "sweep": run_sweep,
    "kernel": run_kernel,
    "oracle": run_oracle,
    "pareto": run_pareto,
    "net": run_net,
}


def _message(err):
    # KeyError subclasses quote their message in str()
    return err.args[0] if isinstance(err, KeyError) and err.args else str(err)


def main(argv=None):
    """Run one command.

    Returns:
        int: 0 on success, 1 on a failed run or oracle, 2 on a usage error.
    """
    arg_parser = parser_add_args(initialize_parser())
    try:
        config = process_args(arg_parser, argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ConfigError, TypeError) as err:
        print(f"axmul: {_message(err)}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(level=config.log_level, stream=sys.stderr, force=True,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[config.command](config)
    except USAGE_ERRORS as err:
        print(f"axmul: {_message(err)}", file=sys.stderr)
        return EXIT_USAGE
    except RUN_ERRORS as err:
        print(f"axmul: {_message(err)}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
