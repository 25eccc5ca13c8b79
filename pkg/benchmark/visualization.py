import sys

import pandas as pd


def percent(value):
    """Two-decimal percentage text of a fraction."""
    return f"{100 * float(value):.2f}"


def sweep_entry(cfg, spec, report, stats=None):
    """One CSV row of a sweep.

    The *_pct columns hold two-decimal strings; the raw fractions follow
    for anything needing more precision.
    """
    entry = {"config": str(cfg),
             "width_or_format": spec.label,
             "sampler": spec.sampler,
             "samples": report.count,
             "seed": spec.seed,
             "mred_pct": percent(report.mred)}
    for m in report.thresholds:
        entry[f"pred{m}_pct"] = percent(report.pred(m))
    entry.update({"pon_pct": percent(report.pon),
                  "pun_pct": percent(report.pun),
                  "max_red": report.max_red,
                  "excluded": report.excluded_zero,
                  "mred": float(report.mred),
                  "bias": float(report.bias)})
    for m in report.thresholds:
        entry[f"pred{m}"] = float(report.pred(m))
    entry.update({"pon": float(report.pon), "pun": float(report.pun)})
    for name, value in (stats or {}).items():
        entry[f"red_{name}"] = value
    return entry


def build_dataframe(benchmark):
    """Constructs the sweep table from a compiled SweepBenchmark.

    Args:
        benchmark (SweepBenchmark): Compiled sweep.
    """
    return pd.DataFrame([sweep_entry(cfg, benchmark.spec, report, stats)
                         for cfg, report, stats in benchmark.rows()])


def write_frame(frame, out=None):
    """Write `frame` as CSV to `out`, or to stdout when no path is given.

    Rows end with a bare newline.
    """
    if out is None:
        frame.to_csv(sys.stdout, index=False, lineterminator="\n")
    else:
        frame.to_csv(out, index=False, lineterminator="\n")
