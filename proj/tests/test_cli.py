"""End-to-end checks of the mflab command line.

Usage: test_cli.py <mflab-binary> <configs-dir> <work-dir>
"""
import csv
import json
import shutil
import subprocess
import sys
import unittest
import xml.etree.ElementTree as ET
from pathlib import Path

CLI = CONFIGS = WORK = None


def run(*args):
    return subprocess.run([str(CLI), *map(str, args)], capture_output=True, text=True)


def fresh(name):
    d = WORK / name
    shutil.rmtree(d, ignore_errors=True)
    return d


def ledger(d):
    return [json.loads(l) for l in (d / "metrics.jsonl").read_text().splitlines() if l]


class ExitCodes(unittest.TestCase):
    def test_no_subcommand_is_a_config_error(self):
        self.assertEqual(run().returncode, 2)

    def test_unknown_flag(self):
        self.assertEqual(run("run", "--bogus").returncode, 2)

    def test_missing_config_file(self):
        r = run("run", "--config", WORK / "missing.json", "--out", fresh("missing"))
        self.assertEqual(r.returncode, 2)
        self.assertIn("missing.json", r.stderr)

    def test_malformed_json(self):
        bad = WORK / "bad.json"
        bad.write_text("{ not json")
        self.assertEqual(run("run", "--config", bad).returncode, 2)

    def test_zero_epochs_writes_nothing(self):
        cfg = json.loads((CONFIGS / "two_point_vae_vs_twostep.json").read_text())
        cfg["pipelines"][0]["train"]["epochs"] = 0
        out = fresh("zero_epochs")
        cfg["output_dir"] = str(out)
        path = WORK / "zero_epochs.json"
        path.write_text(json.dumps(cfg))
        r = run("run", "--config", path)
        self.assertEqual(r.returncode, 2)
        self.assertFalse(out.exists())

    def test_bad_seed_list(self):
        r = run("run", "--config", CONFIGS / "two_point_vae_vs_twostep.json", "--seed", "x")
        self.assertEqual(r.returncode, 2)

    def test_failed_seed_is_a_run_error(self):
        out = fresh("no_checkpoints")
        r = run("evaluate", "--config", CONFIGS / "two_point_vae_vs_twostep.json", "--seed", "0", "--out", out)
        self.assertEqual(r.returncode, 1)
        errors = [rec for rec in ledger(out) if "error" in rec]
        self.assertTrue(errors)
        self.assertEqual(errors[0]["error"]["code"], "io")


class TwoPoint(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.out = fresh("two_point")
        cls.result = run("run", "--config", CONFIGS / "two_point_vae_vs_twostep.json",
                         "--seed", "0,1", "--out", cls.out, "--plots")

    def test_exit_ok(self):
        self.assertEqual(self.result.returncode, 0, self.result.stderr)

    def test_ledger_has_both_pipelines(self):
        recs = ledger(self.out)
        seen = {(r["pipeline"], r["metric"]) for r in recs}
        self.assertIn(("vae", "quantized_mass"), seen)
        self.assertIn(("ae_gmm", "component_weight"), seen)
        hashes = {r["config_hash"] for r in recs}
        self.assertEqual(len(hashes), 1)
        self.assertEqual([r["seed"] for r in recs], sorted(r["seed"] for r in recs))

    def test_rerun_is_resumed_not_duplicated(self):
        before = (self.out / "metrics.jsonl").read_text()
        r = run("run", "--config", CONFIGS / "two_point_vae_vs_twostep.json", "--seed", "0,1", "--out", self.out)
        self.assertEqual(r.returncode, 0)
        self.assertEqual((self.out / "metrics.jsonl").read_text(), before)

    def test_svgs_are_well_formed(self):
        svgs = list(self.out.glob("*.svg"))
        self.assertTrue(svgs)
        for p in svgs:
            root = ET.parse(p).getroot()
            self.assertTrue(root.tag.endswith("svg"))

    def test_report(self):
        r = run("report", "--out", self.out)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("quantized_mass", r.stdout)
        self.assertTrue((self.out / "report.md").exists())

    def test_report_without_ledger(self):
        self.assertEqual(run("report", "--out", fresh("empty_report")).returncode, 1)


class OverfitDemo(unittest.TestCase):
    def test_default_demo(self):
        out = fresh("overfit")
        r = run("overfit-demo", "--out", out, "--plots")
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(out / "overfit_profile.csv") as f:
            rows = list(csv.DictReader(f))
        on = {}
        for row in rows:
            if row["on_manifold"] in ("1", "true"):
                on.setdefault(row["point"], []).append((float(row["sigma"]), float(row["log_density"])))
        self.assertTrue(on)
        for series in on.values():
            series.sort(reverse=True)
            values = [v for _, v in series]
            self.assertTrue(all(a < b for a, b in zip(values, values[1:])), values)
        for p in out.glob("*.svg"):
            ET.parse(p)

    def test_bundled_demo_config(self):
        r = run("overfit-demo", "--config", CONFIGS / "overfit_demo.json", "--out", fresh("overfit_cfg"))
        self.assertEqual(r.returncode, 0, r.stderr)

    def test_empty_sigma_list(self):
        path = WORK / "empty_sigmas.json"
        path.write_text(json.dumps({"schema_version": 1, "overfit": {"sigmas": []}}))
        self.assertEqual(run("overfit-demo", "--config", path, "--out", fresh("empty_sigmas")).returncode, 2)


class Circle(unittest.TestCase):
    def test_circle_profile(self):
        out = fresh("circle")
        r = run("run", "--config", CONFIGS / "circle_ae_ebm.json", "--seed", "0", "--out", out)
        self.assertIn(r.returncode, (0, 1), r.stderr)
        with open(out / "ae_gmm_seed0_circle.csv") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 512)
        self.assertEqual(list(rows[0].keys()),
                         ["theta", "truth", "model", "p_x", "log_pz", "log_volume", "on_manifold"])


if __name__ == "__main__":
    CLI, CONFIGS, WORK = Path(sys.argv[1]), Path(sys.argv[2]), Path(sys.argv[3])
    WORK.mkdir(parents=True, exist_ok=True)
    unittest.main(argv=[sys.argv[0], "-v"])
