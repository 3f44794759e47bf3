import sys
import os
import json
import unittest
import tempfile
import shutil

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from fft_energy.analysis import analyze_run, analyze_sweep
from fft_energy.attribution import FrequencyStatus
from fft_energy.catalog import BUNDLED_CATALOG, load_catalog
from fft_energy.core import Precision
from fft_energy.errors import AttributionError, ConfigError, ConfigMismatch, InputError, MissingInput, NoData
from fft_energy.ingest import PowerLogFormat
from fft_energy.manifest import load_manifests, manifest_from_dict, write_manifest
from fft_energy.reports import AnalysisReport, atomic_write_text, load_json
from fft_energy.synthdev import PowerModel, SamplerModel, TimeModel, analytic_energy, simulate_run, write_run


class TestManifest(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def _write(self, text, name="manifest.yaml"):
        path = os.path.join(self.test_dir, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_single_run(self):
        path = self._write(
            "device: Tesla V100\nprecision: FP32\nfft_length: 16384\nrequested_mhz: 945\n"
            "power_log: run.power.csv\ntrace_log: run.trace.csv\n"
        )
        runs = load_manifests(path)
        self.assertEqual(len(runs), 1)
        run = runs[0]
        self.assertEqual(run.precision, Precision.FP32)
        self.assertEqual(run.requested_mhz, 945.0)
        self.assertEqual(run.power_log, os.path.join(self.test_dir, "run.power.csv"))
        self.assertEqual(run.label, "run1@945")
        self.assertEqual(run.config.n, 16384)

    def test_defaults_and_runs(self):
        path = self._write(
            "defaults: {device: Jetson Nano, precision: FP16, fft_length: 1024, format: tegrastats}\n"
            "runs:\n"
            "  - {label: hi, requested_mhz: 921.6, power_log: a.txt, trace_log: a.csv}\n"
            "  - {label: lo, requested_mhz: 460.8, power_log: /abs/b.txt, trace_log: b.csv, precision: FP32}\n"
        )
        runs = load_manifests(path)
        self.assertEqual([r.label for r in runs], ["hi", "lo"])
        self.assertEqual(runs[0].log_format, PowerLogFormat.TEGRA_TEXT)
        self.assertEqual(runs[1].precision, Precision.FP32)
        self.assertEqual(runs[1].power_log, "/abs/b.txt")

    def test_missing_key(self):
        with self.assertRaises(ConfigError) as ctx:
            manifest_from_dict({"device": "Tesla V100", "precision": "FP32", "fft_length": 1024})
        self.assertIn("requested_mhz", str(ctx.exception))

    def test_bad_values(self):
        entry = {"device": "x", "precision": "FP32", "fft_length": "many", "requested_mhz": 945,
                 "power_log": "a", "trace_log": "b"}
        with self.assertRaises(ConfigError):
            manifest_from_dict(entry)
        with self.assertRaises(ConfigError):
            manifest_from_dict({**entry, "fft_length": 1024, "precision": "FP8"})

    def test_bad_files(self):
        with self.assertRaises(MissingInput):
            load_manifests(os.path.join(self.test_dir, "absent.yaml"))
        with self.assertRaises(InputError):
            load_manifests(self._write("runs: [unclosed\n"))
        with self.assertRaises(ConfigError):
            load_manifests(self._write("- just\n- a list\n"))
        with self.assertRaises(ConfigError):
            load_manifests(self._write("defaults: {}\nruns: []\n"))

    def test_write_and_reload(self):
        path = os.path.join(self.test_dir, "sweep.yaml")
        write_manifest(path, {"device": "Tesla V100", "precision": "FP32", "fft_length": 1024},
                       [{"label": "f945", "requested_mhz": 945.0, "power_log": "p.csv", "trace_log": "t.csv"}])
        runs = load_manifests(path)
        self.assertEqual(runs[0].label, "f945")
        self.assertEqual(runs[0].trace_log, os.path.join(self.test_dir, "t.csv"))


class TestAnalysis(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.catalog = load_catalog(BUNDLED_CATALOG)
        self.power = PowerModel(40.0, 0.02, 2e-8)
        self.time = TimeModel(t_mem=1.0, f_crit=1000.0)

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def _run(self, f, device="Tesla V100", cap=None, fft_length=16384, label=None):
        samples, trace = simulate_run(self.power, self.time, SamplerModel(), f, clock_cap=cap, align=True)
        entry = write_run(self.test_dir, label or f"f{f:g}", samples, trace, f)
        entry.update(device=device, precision="FP32", fft_length=fft_length)
        return manifest_from_dict(entry, self.test_dir)

    def test_analyze_run(self):
        analysis = analyze_run(self._run(945.0), self.catalog)
        self.assertEqual(analysis.verdict.status, FrequencyStatus.OK)
        self.assertAlmostEqual(analysis.report.energy_j, analytic_energy(self.power, self.time, 945.0), places=6)
        self.assertTrue(analysis.sampling_ok)
        self.assertEqual(analysis.warnings, [])

    def test_capped_run_warns(self):
        analysis = analyze_run(self._run(1455.0, device="Titan V", cap=1335.0), self.catalog)
        self.assertEqual(analysis.verdict.status, FrequencyStatus.CAPPED)
        self.assertEqual(analysis.verdict.achieved_mode, 1335.0)
        self.assertEqual(len(analysis.warnings), 1)
        self.assertIn("1335", analysis.warnings[0])

    def test_missing_trace(self):
        run = self._run(945.0)
        os.remove(run.trace_log)
        with self.assertRaises(MissingInput):
            analyze_run(run, self.catalog)

    def _skewed_run(self, **offsets):
        """Power log on 0-1000 ms, kernel logged 5000 ms later on another clock."""
        power = os.path.join(self.test_dir, "skew.power.csv")
        trace = os.path.join(self.test_dir, "skew.trace.csv")
        with open(power, "w") as f:
            f.write("timestamp_ms,power_w,core_clock_mhz,mem_clock_mhz\n")
            for t in range(0, 1001, 10):
                f.write(f"{t},100,945,877\n")
        with open(trace, "w") as f:
            f.write("start_ms,duration_ms,name\n5200,500,fft\n")
        entry = {"device": "Tesla V100", "precision": "FP32", "fft_length": 16384, "requested_mhz": 945,
                 "power_log": power, "trace_log": trace, **offsets}
        return manifest_from_dict(entry, self.test_dir)

    def test_trace_offset_corrects_skew(self):
        run = self._skewed_run(trace_offset_ms=-5000)
        self.assertEqual(run.trace_offset_ms, -5000.0)
        self.assertEqual(run.power_offset_ms, 0.0)
        analysis = analyze_run(run, self.catalog)
        self.assertAlmostEqual(analysis.report.energy_j, 50.0)
        self.assertEqual(analysis.verdict.status, FrequencyStatus.OK)

    def test_power_offset_corrects_skew(self):
        analysis = analyze_run(self._skewed_run(power_offset_ms=5000), self.catalog)
        self.assertAlmostEqual(analysis.report.energy_j, 50.0)

    def test_skew_without_offset_fails(self):
        with self.assertRaises(AttributionError):
            analyze_run(self._skewed_run(), self.catalog)

    def test_analyze_sweep(self):
        runs = [self._run(f) for f in (1455.0, 1200.0, 945.0, 705.0, 495.0)]
        sweep = analyze_sweep(runs, self.catalog)
        self.assertEqual(sweep.device, "Tesla V100")
        self.assertEqual(sweep.optimal, 945.0)
        self.assertEqual(len(sweep.points), 5)

    def test_sweep_mixing_lengths(self):
        runs = [self._run(1455.0), self._run(945.0, fft_length=8192, label="other")]
        with self.assertRaises(ConfigMismatch):
            analyze_sweep(runs, self.catalog)
        with self.assertRaises(NoData):
            analyze_sweep([], self.catalog)


class TestReports(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_atomic_write_leaves_no_temporary_files(self):
        path = os.path.join(self.test_dir, "nested", "out.txt")
        atomic_write_text(path, "first\n")
        atomic_write_text(path, "second\n")
        with open(path) as f:
            self.assertEqual(f.read(), "second\n")
        self.assertEqual(os.listdir(os.path.dirname(path)), ["out.txt"])

    def test_report_formats(self):
        samples, trace = simulate_run(PowerModel(50.0), TimeModel(t_mem=0.5), SamplerModel(), 945.0)
        entry = write_run(self.test_dir, "run", samples, trace, 945.0)
        entry.update(device="Tesla V100", precision="FP32", fft_length=16384)
        analysis = analyze_run(manifest_from_dict(entry, self.test_dir), load_catalog(BUNDLED_CATALOG))
        report = AnalysisReport(runs=[analysis])

        document = json.loads(report.to_json())
        self.assertEqual(document["schema_version"], 1)
        self.assertEqual(document["runs"][0]["verdict"]["status"], "Ok")
        self.assertAlmostEqual(document["runs"][0]["energy"]["energy_j"], 25.0)
        self.assertIn("run", report.to_text())

        path = report.write(os.path.join(self.test_dir, "report.json"), "json")
        self.assertEqual(load_json(path)["runs"][0]["label"], "run")

    def test_load_json_errors(self):
        with self.assertRaises(MissingInput):
            load_json(os.path.join(self.test_dir, "absent.json"))
        path = os.path.join(self.test_dir, "bad.json")
        with open(path, "w") as f:
            f.write("{not json")
        with self.assertRaises(InputError):
            load_json(path)


if __name__ == '__main__':
    unittest.main()
