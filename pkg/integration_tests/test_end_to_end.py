import sys
import os
import io
import unittest
import tempfile
import shutil
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from fft_energy import (
    FftConfig,
    PowerSample,
    SamplerModel,
    analytic_energy,
    analytic_optimum,
    build_sweep,
    energy,
    localize_interval,
    optimal_frequency,
    parse_power_log,
    random_models,
    simulate_run,
    simulate_sweep_points,
)
from fft_energy.cli import main
from fft_energy.core import DeviceSpec, allowed_frequencies
from fft_energy.ingest import format_smi_csv

# Synthetic device with a regular 100 MHz grid.
BENCH = DeviceSpec(name="bench", f_max=1500.0, f_min=300.0, step_pattern=(100.0,), boost_clock=1500.0)
MODEL_COUNT = 50
FREQUENCIES = (1500.0, 1200.0, 900.0, 600.0, 300.0)


def kernel_energy(samples, trace):
    return energy(localize_interval(samples, trace.intervals[0]))


@pytest.mark.integration
class TestEnergyOracle(unittest.TestCase):
    """Integrated energy of simulated runs against the closed-form model."""

    def setUp(self):
        self.models = random_models(MODEL_COUNT, seed=2024)

    @pytest.mark.slow
    def test_aligned_sampling_is_exact(self):
        sampler = SamplerModel(requested_period=10.0)
        for i, (power, time) in enumerate(self.models):
            for f in FREQUENCIES:
                samples, trace = simulate_run(power, time, sampler, f, seed=i, align=True)
                expected = analytic_energy(power, time, f)
                self.assertLessEqual(abs(kernel_energy(samples, trace) - expected), 1e-6 * expected, (i, f))

    @pytest.mark.slow
    def test_jittered_sampling_within_two_percent(self):
        sampler = SamplerModel(requested_period=10.0, jitter=2.0, latency=4.2)
        for i, (power, time) in enumerate(self.models):
            for f in FREQUENCIES:
                samples, trace = simulate_run(power, time, sampler, f, seed=1000 + i)
                expected = analytic_energy(power, time, f)
                self.assertLessEqual(abs(kernel_energy(samples, trace) - expected), 0.02 * expected, (i, f))

    def test_error_shrinks_with_sampling_period(self):
        """The boundary error is bounded by a quarter window of power difference."""
        totals = {}
        for period in (10.0, 5.0):
            errors = []
            for power, time in self.models[:20]:
                samples, trace = simulate_run(power, time, SamplerModel(requested_period=period), 900.0)
                error = abs(kernel_energy(samples, trace) - analytic_energy(power, time, 900.0))
                bound = (power.power(900.0) - power.p_static) * period / 4 / 1000.0
                self.assertLessEqual(error, bound + 1e-9)
                errors.append(error)
            totals[period] = sum(errors)
        self.assertLess(totals[5.0], totals[10.0])


@pytest.mark.integration
class TestOptimalRecovery(unittest.TestCase):
    @pytest.mark.slow
    def test_optimum_within_one_grid_step(self):
        grid = allowed_frequencies(BENCH)
        config = FftConfig(n=16384)
        for i, (power, time) in enumerate(random_models(MODEL_COUNT, seed=7)):
            points = simulate_sweep_points(power, time, SamplerModel(), config, grid, seed=i, align=True)
            sweep = build_sweep(config, points, BENCH)
            self.assertLessEqual(abs(sweep.optimal - analytic_optimum(power, time, grid)), BENCH.max_step, i)
            self.assertEqual(optimal_frequency(points), sweep.optimal)


@pytest.mark.integration
class TestParserRoundTrip(unittest.TestCase):
    def test_smi_csv_round_trip(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            count = int(rng.integers(1, 12))
            times = np.cumsum(rng.uniform(0.01, 30.0, size=count))
            samples = [
                PowerSample(t=float(t), power=float(rng.uniform(0, 300)), core_clock=float(rng.choice([945.0, 1455.0])))
                for t in times
            ]
            self.assertEqual(parse_power_log(format_smi_csv(samples)), samples)


def run_cli(argv):
    with patch('sys.stdout', new=io.StringIO()) as out, patch('sys.stderr', new=io.StringIO()) as err:
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.integration
class TestCommandLineWorkflow(unittest.TestCase):
    """Simulate two sweeps, analyze them, then plan a pipeline with the result."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    @pytest.mark.slow
    def test_full_workflow(self):
        sweeps = []
        for n in (4096, 16384):
            out_dir = os.path.join(self.test_dir, f"n{n}")
            code, output, _ = run_cli([
                "--seed", str(n), "simulate", "--out", out_dir, "--device", "Tesla V100",
                "--frequencies", "1455,1200,945,705,495", "--fft-length", str(n),
                "--jitter", "2", "--latency", "4.2",
            ])
            self.assertEqual(code, 0)
            self.assertIn("analytic_optimum_mhz=945", output)

            sweep_path = os.path.join(self.test_dir, f"sweep{n}.json")
            code, output, _ = run_cli(["sweep", os.path.join(out_dir, "sweep.yaml"), "--out", sweep_path])
            self.assertEqual(code, 0)
            self.assertIn("optimal_mhz=945", output)
            sweeps.append(sweep_path)

        table = os.path.join(self.test_dir, "tradeoff.csv")
        self.assertEqual(run_cli(["tradeoff", *sweeps, "--out", table])[0], 0)
        frame = pd.read_csv(table)
        self.assertEqual(len(frame), 10)
        optimum = frame[frame["frequency_mhz"] == 945]
        self.assertTrue((optimum["eff_gain_pct"] > 0).all())
        self.assertTrue((optimum["time_increase_pct"] > 0).all())

        code, output, _ = run_cli(["meanopt", *sweeps])
        self.assertEqual(code, 0)
        f_mean = output.splitlines()[0]
        self.assertEqual(f_mean, "945")

        pipeline = os.path.join(self.test_dir, "pipeline.yaml")
        with open(pipeline, "w") as f:
            f.write("stages:\n  - {name: load, time_fraction: 0.4}\n  - {name: fft, time_fraction: 0.6}\n")
        plan = os.path.join(self.test_dir, "plan.yaml")
        code, output, _ = run_cli(["plan", pipeline, "--device", "Tesla V100", "--stage", "fft",
                                   "--mhz", f_mean, "--out", plan])
        self.assertEqual(code, 0)
        self.assertIn("lock   fft 945-945 MHz", output)
        self.assertTrue(os.path.exists(plan))


if __name__ == '__main__':
    unittest.main()
