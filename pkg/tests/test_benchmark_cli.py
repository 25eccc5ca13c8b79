# pylint: skip-file

import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import pandas as pd

from benchmark.benchmark import RunConfig, main
from src.axmul.net_approx import ENERGY_TABLE


SWEEP_HEADER = ("config,width_or_format,sampler,samples,seed,mred_pct,pred2_pct,pred5_pct,"
                "pred10_pct,pon_pct,pun_pct,max_red,excluded,mred,bias,pred2,pred5,pred10,"
                "pon,pun,red_median,red_p90,red_p99,red_std")


class TestCli(unittest.TestCase):

    def setUp(self):
        self._directory = tempfile.TemporaryDirectory()
        self.directory = self._directory.name

    def tearDown(self):
        self._directory.cleanup()

    def path(self, name):
        return os.path.join(self.directory, name)

    def read(self, name):
        with open(self.path(name), "rb") as handle:
            return handle.read()

    def test_oracle(self):
        self.assertEqual(main(["oracle", "fixed_core", "--out", self.path("o.csv")]), 0)
        frame = pd.read_csv(self.path("o.csv"))
        self.assertEqual(frame["suite"].tolist(), ["fixed_core"])
        self.assertEqual(int(frame["checked"][0]), 2 * 65536)

    def test_dyfpu_oracle(self):
        self.assertEqual(main(["oracle", "dyfpu", "-o", self.path("o.csv")]), 0)
        frame = pd.read_csv(self.path("o.csv"))
        self.assertEqual(int(frame["checked"][0]), 5 * 10 * (1 << 20))

    def test_oracle_fault(self):
        self.assertEqual(main(["oracle", "dyfxu", "--inject-fault", "-o", self.path("o.csv")]), 1)
        self.assertEqual(main(["oracle", "dyfxu", "-o", self.path("o.csv")]), 0)

    def test_usage_errors(self):
        self.assertEqual(main(["sweep", "--cfg", "bogus", "-o", self.path("s.csv")]), 2)
        self.assertEqual(main(["oracle", ""]), 2)
        self.assertEqual(main(["transmogrify"]), 2)
        self.assertEqual(main(["sweep", "--samples", "0"]), 2)
        self.assertFalse(os.path.exists(self.path("s.csv")))

    def test_sweep_csv(self):
        argv = ["sweep", "--cfg", "rad:k=6", "--cfg", "axfxu:p=2,r=4", "--samples", "5000"]
        self.assertEqual(main(argv + ["-o", self.path("a.csv")]), 0)
        data = self.read("a.csv")
        self.assertEqual(data.decode().splitlines()[0], SWEEP_HEADER)
        self.assertNotIn(b"\r", data)
        frame = pd.read_csv(self.path("a.csv"))
        self.assertEqual(frame["config"].tolist(), ["rad:k=6", "axfxu:p=2,r=4"])
        self.assertEqual(frame["samples"].tolist(), [5000, 5000])

    def test_sweep_is_deterministic(self):
        argv = ["sweep", "--cfg", "rad:k=8", "--cfg", "perf:p=2", "--samples", "5000",
                "--seed", "3"]
        self.assertEqual(main(argv + ["-o", self.path("a.csv"), "--threads", "1"]), 0)
        self.assertEqual(main(argv + ["-o", self.path("b.csv")]), 0)
        self.assertEqual(main(argv + ["-o", self.path("c.csv"), "--threads", "2"]), 0)
        self.assertEqual(self.read("a.csv"), self.read("b.csv"))
        self.assertEqual(self.read("a.csv"), self.read("c.csv"))

    def test_sweep_samplers(self):
        self.assertEqual(main(["sweep", "--n", "12", "--exhaustive-b", "--cfg", "rad:k=6",
                               "-o", self.path("e.csv")]), 0)
        self.assertEqual(pd.read_csv(self.path("e.csv"))["samples"].tolist(), [4096])
        self.assertEqual(main(["sweep", "--format", "half", "--cfg", "axfxu:p=4,r=6",
                               "--samples", "2000", "-o", self.path("f.csv")]), 0)
        frame = pd.read_csv(self.path("f.csv"))
        self.assertEqual(frame["width_or_format"].tolist(), ["half"])
        self.assertEqual(frame["sampler"].tolist(), ["uniform-normal-fp"])

    def test_config_file(self):
        with open(self.path("run.json"), "w") as handle:
            json.dump({"cfg": ["rad:k=8"], "samples": 500, "seed": 9}, handle)
        argv = ["sweep", "--config", self.path("run.json"), "-o", self.path("s.csv")]
        self.assertEqual(main(argv), 0)
        frame = pd.read_csv(self.path("s.csv"))
        self.assertEqual(frame["config"].tolist(), ["rad:k=8"])
        self.assertEqual(frame["samples"].tolist(), [500])
        self.assertEqual(main(argv + ["--samples", "700"]), 0)
        self.assertEqual(pd.read_csv(self.path("s.csv"))["samples"].tolist(), [700])

    def test_bad_config_file(self):
        with open(self.path("run.json"), "w") as handle:
            json.dump({"colour": "blue"}, handle)
        self.assertEqual(main(["sweep", "--config", self.path("run.json")]), 2)
        self.assertEqual(main(["sweep", "--config", self.path("missing.json")]), 2)

    def test_unwritable_output(self):
        out = os.path.join(self.directory, "missing", "s.csv")
        self.assertEqual(main(["sweep", "--cfg", "acc", "--samples", "100", "-o", out]), 1)

    def test_pareto(self):
        frame = pd.DataFrame({
            "config": ["acc", "rad:k=6", "rad:k=8", "rad:k=10", "axfxu:p=2,r=4"],
            "mred": [0.0, 0.0008, 0.0028, 0.0093, 0.0023],
        })
        frame.to_csv(self.path("points.csv"), index=False)
        argv = ["pareto", "--input", self.path("points.csv"), "-o", self.path("front.csv")]
        self.assertEqual(main(argv), 2)
        self.assertEqual(main(argv + ["--energy-table", str(ENERGY_TABLE)]), 0)
        front = pd.read_csv(self.path("front.csv"))
        self.assertEqual(front["config"].tolist(),
                         ["acc", "rad:k=6", "axfxu:p=2,r=4", "rad:k=10"])

    def test_pareto_mixed_families(self):
        frame = pd.DataFrame({
            "config": ["acc", "rad:k=6", "rad:k=8", "axfxu:p=2,r=4", "roup2:p=3,r=10",
                       "radr:k=6,r=8", "drad:k=8,m=8"],
            "mred": [0.0, 0.0008, 0.0028, 0.0023, 0.0060, 0.0019, 0.0040],
        })
        frame.to_csv(self.path("points.csv"), index=False)
        argv = ["pareto", "--input", self.path("points.csv"), "-o", self.path("front.csv"),
                "--energy-table", str(ENERGY_TABLE)]
        self.assertEqual(main(argv), 0)
        front = pd.read_csv(self.path("front.csv"))
        self.assertEqual(front["config"].tolist(),
                         ["acc", "rad:k=6", "radr:k=6,r=8", "axfxu:p=2,r=4", "drad:k=8,m=8",
                          "roup2:p=3,r=10"])
        self.assertEqual(front["cost_units"].tolist(), [3749, 3238, 2531, 2274, 1549, 1484])

    def test_pareto_over_sweep(self):
        configs = ["rad:k=6", "rad:k=8", "axfxu:p=2,r=4", "axfxu:p=4,r=6", "roup2:p=3,r=6",
                   "roup2:p=4,r=6", "radr:k=8,r=4", "dradp:k=8,m=8"]
        argv = ["sweep", "--samples", "5000", "-o", self.path("s.csv")]
        for text in configs:
            argv += ["--cfg", text]
        self.assertEqual(main(argv), 0)
        self.assertEqual(main(["pareto", "--input", self.path("s.csv"), "--energy-table",
                               str(ENERGY_TABLE), "-o", self.path("front.csv")]), 0)
        front = pd.read_csv(self.path("front.csv"))
        sweep = pd.read_csv(self.path("s.csv"))
        self.assertTrue(set(front["config"]) <= set(configs))
        self.assertEqual(front["config"].iloc[0],
                         sweep.sort_values("mred")["config"].iloc[0])
        for _, row in front.iterrows():
            for _, other in front.iterrows():
                dominates = (other["mred"] <= row["mred"] and other["cost_units"] <= row["cost_units"]
                             and (other["mred"], other["cost_units"]) != (row["mred"], row["cost_units"]))
                self.assertFalse(dominates, msg=f"{other['config']} over {row['config']}")

    def test_runs_as_module(self):
        root = Path(__file__).resolve().parents[1]
        result = subprocess.run([sys.executable, "-m", "benchmark.benchmark", "oracle", "winograd"],
                                cwd=root, capture_output=True, text=True)
        self.assertEqual(result.returncode, 0, msg=result.stderr)
        self.assertIn("winograd", result.stdout)

    def test_partition_samples(self):
        self.assertEqual(RunConfig("oracle").partition_samples, 1_000_000)
        argv = ["oracle", "dlsb", "--partition-samples", "1000", "-o", self.path("o.csv")]
        self.assertEqual(main(argv), 0)
        frame = pd.read_csv(self.path("o.csv"))
        self.assertEqual(int(frame["checked"][0]), 4 * 2 * 65536 + 1000)
        self.assertEqual(main(["oracle", "dlsb", "--partition-samples", "0"]), 2)

    def test_encode_option(self):
        argv = ["kernel", "fir", "--samples", "500", "--cfg", "rad:k=8", "-o", self.path("f.csv")]
        self.assertEqual(main(argv + ["--encode", "coefficient"]), 0)
        self.assertEqual(main(argv + ["--encode", "neither"]), 2)

    def test_kernels(self):
        self.assertEqual(main(["kernel", "sobel", "--save-dir", self.path("edges"),
                               "-o", self.path("k.csv")]), 0)
        frame = pd.read_csv(self.path("k.csv"))
        self.assertEqual(frame["cer"].tolist(), [1.0, 1.0, 1.0])
        self.assertTrue(os.path.exists(self.path(os.path.join("edges", "sobel_rad_k_6.pgm"))))
        self.assertEqual(main(["kernel", "matmul", "--samples", "50",
                               "-o", self.path("m.csv")]), 0)
        self.assertEqual(main(["kernel", "fir", "--samples", "500", "--cfg", "rad:k=8",
                               "-o", self.path("f.csv")]), 0)
        self.assertEqual(main(["kernel", "blur", "--cfg", "dradp:k=6,m=8"]), 2)

    def test_net(self):
        argv = ["net", "--images", "1", "--cfg", "acc", "--cfg", "rad:k=8",
                "-o", self.path("n.csv")]
        self.assertEqual(main(argv), 0)
        frame = pd.read_csv(self.path("n.csv"), dtype={"saving_pct": str})
        self.assertEqual(frame["scheme"].tolist(), ["acc", "rad:k=8"])
        self.assertEqual(frame["saving_pct"][0], "0.00")
        self.assertEqual(float(frame["accuracy"][0]), 1.0)
