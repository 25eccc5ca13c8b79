import statistics
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.axmul.error_lab import products, red_values, report_for
from src.axmul.utils import default_threads


class SweepBenchmark:
    """Sweep Encapsulation.

    Evaluates every configuration of a SweepSpec on its shared operands
    and keeps the metrics report plus a summary of the per-sample RED
    distribution.

    Attributes:
        spec (SweepSpec): The sweep to run.
        threads (int): Worker threads; results do not depend on it.

    """
    def __init__(self, spec, threads: int = None):
        self._spec = spec
        self.threads = threads or default_threads()
        self._reports = {}
        self._statistics = {}

    @property
    def spec(self):
        return self._spec

    @property
    def reports(self):
        return self._reports

    @property
    def statistics(self):
        return self._statistics

    def compile(self):
        """Runs every configuration and compiles statistics.

        """
        operands = self.spec.operands()
        if self.threads == 1:
            outcomes = [self._evaluate(cfg, operands) for cfg in self.spec.configs]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                outcomes = list(pool.map(lambda cfg: self._evaluate(cfg, operands),
                                         self.spec.configs))

        for cfg, (report, reds) in zip(self.spec.configs, outcomes):
            self._reports[cfg] = report
            self._statistics[cfg] = self._generate_statistics(reds)

        return self

    def rows(self):
        """(config, report, statistics) in configuration order."""
        return [(cfg, self._reports[cfg], self._statistics[cfg]) for cfg in self.spec.configs]

    def _evaluate(self, cfg, operands):
        accurate, approximate = products(cfg, self.spec, operands)
        report = report_for(accurate, approximate, self.spec)
        reds = red_values(accurate, approximate, self.spec.fmt
                          if self.spec.sampler == "uniform-normal-fp" else None)
        return report, reds

    @staticmethod
    def _generate_statistics(reds):
        """Summarize per-sample RED.

        Returns:
            {
            "median": None,
            "p90": None,
            "p99": None,
            "std": None
            }
        """
        stats = {"median": None, "p90": None, "p99": None, "std": None}
        if reds.size:
            stats["median"] = statistics.median(reds.tolist())
            stats["p90"] = float(np.percentile(reds, 90))
            stats["p99"] = float(np.percentile(reds, 99))
            stats["std"] = float(np.std(reds))
        return stats
