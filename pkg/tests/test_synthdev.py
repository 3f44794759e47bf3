import sys
import os
import unittest
import tempfile
import shutil

import numpy as np

# Add the parent directory to the path to import the package
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from fft_energy.attribution import effective_sampling_period, localize_interval
from fft_energy.core import DeviceSpec, FftConfig, allowed_frequencies
from fft_energy.ingest import read_kernel_trace, read_power_log
from fft_energy.metrics import energy
from fft_energy.sweep import optimal_frequency
from fft_energy.synthdev import (
    KERNEL_NAME,
    PowerModel,
    SamplerModel,
    TimeModel,
    analytic_energy,
    analytic_optimum,
    canonical_models,
    random_models,
    simulate_run,
    simulate_sweep_points,
    write_run,
)


def kernel_energy(samples, trace):
    return energy(localize_interval(samples, trace.intervals[0]))


class TestModels(unittest.TestCase):
    def test_power_model(self):
        model = PowerModel(p_static=40.0, k_lin=0.02, k_dyn=2e-8)
        self.assertAlmostEqual(model.power(1000.0), 80.0)
        self.assertEqual(PowerModel(p_static=50.0).power(1234.0), 50.0)

    def test_power_model_validation(self):
        with self.assertRaises(ValueError):
            PowerModel(p_static=0.0)
        with self.assertRaises(ValueError):
            PowerModel(p_static=10.0, k_dyn=-1.0)

    def test_time_model(self):
        model = TimeModel(t_mem=1.0, f_crit=1000.0, idle_state_f=300.0, inflation=2.0)
        self.assertEqual(model.time(1200.0), 1.0)
        self.assertEqual(model.time(500.0), 2.0)
        self.assertEqual(model.time(250.0), 8.0)

    def test_sampler_validation(self):
        with self.assertRaises(ValueError):
            SamplerModel(requested_period=10.0, jitter=10.0)
        self.assertAlmostEqual(SamplerModel(requested_period=10.0, latency=4.2).mean_period, 14.2)

    def test_analytic_optimum(self):
        grid = [1200.0, 1100.0, 1000.0, 900.0]
        # Energy grows with the clock when time does not depend on it
        self.assertEqual(analytic_optimum(PowerModel(40.0, 0.02, 2e-8), TimeModel(t_mem=1.0), grid), 900.0)
        # Flat energy above f_crit: ties go to the highest clock
        self.assertEqual(analytic_optimum(PowerModel(50.0), TimeModel(t_mem=1.0, f_crit=1000.0), grid), 1200.0)

    def test_energy_cancellation(self):
        """Test P(f) = f against t(f) = 1/f."""
        power, time = PowerModel(p_static=0.0, k_lin=1.0), TimeModel(t_mem=1e-6, f_crit=1e6)
        for f in (100.0, 945.0, 1530.0):
            self.assertAlmostEqual(analytic_energy(power, time, f), 1.0)

    def test_optimum_at_compute_threshold(self):
        grid = allowed_frequencies(DeviceSpec(name="Tesla V100", f_max=1530, f_min=135, step_pattern=(8, 7)))
        power, time = PowerModel(40.0, 0.02, 2e-8), TimeModel(t_mem=1.0, f_crit=945.0)
        self.assertEqual(analytic_optimum(power, time, grid), 945.0)
        dense = np.arange(135.0, 1531.0)
        energies = np.array([analytic_energy(power, time, f) for f in dense])
        self.assertEqual(dense[int(np.argmin(energies))], 945.0)

    def test_random_models_are_reproducible(self):
        self.assertEqual(random_models(5, seed=3), random_models(5, seed=3))
        for _, time in random_models(20, seed=1):
            self.assertGreaterEqual(time.time(2000.0), 1.0)


class TestSimulateRun(unittest.TestCase):
    def test_constant_power(self):
        """Test that a 50 W one-second kernel integrates to 50 J."""
        samples, trace = simulate_run(PowerModel(50.0), TimeModel(t_mem=1.0), SamplerModel(), 1000.0)
        self.assertAlmostEqual(kernel_energy(samples, trace), 50.0)
        self.assertEqual(trace.intervals[0].name, KERNEL_NAME)

    def test_windows_inside_short_kernel(self):
        samples, trace = simulate_run(PowerModel(50.0), TimeModel(t_mem=0.1), SamplerModel(requested_period=10.0), 1000.0)
        localized = localize_interval(samples, trace.intervals[0])
        full = [w for w in localized.weights if w > 0]
        self.assertEqual(len(full), 10)
        self.assertAlmostEqual(localized.weighted_count, 10.0)

    def test_idle_rolls(self):
        samples, trace = simulate_run(PowerModel(40.0, 0.02), TimeModel(t_mem=0.5), SamplerModel(), 1000.0)
        kernel = trace.intervals[0]
        self.assertEqual(kernel.start, 100.0)
        self.assertEqual(samples[0].power, 40.0)
        self.assertEqual(samples[-1].power, 40.0)
        self.assertGreaterEqual(samples[-1].t, kernel.end + 100.0)

    def test_same_seed_same_output(self):
        sampler = SamplerModel(requested_period=10.0, jitter=3.0, latency=4.2, seed=9)
        first = simulate_run(PowerModel(40.0), TimeModel(t_mem=1.0), sampler, 945.0)
        second = simulate_run(PowerModel(40.0), TimeModel(t_mem=1.0), sampler, 945.0)
        self.assertEqual(first, second)
        other = simulate_run(PowerModel(40.0), TimeModel(t_mem=1.0), sampler, 945.0, seed=10)
        self.assertNotEqual(first[0], other[0])

    def test_sampler_latency(self):
        """Test the realized period of a 10 ms request with 4.2 ms latency."""
        sampler = SamplerModel(requested_period=10.0, jitter=2.0, latency=4.2, seed=1)
        samples, _ = simulate_run(PowerModel(40.0), TimeModel(t_mem=5.0), sampler, 945.0)
        self.assertAlmostEqual(effective_sampling_period(samples), 14.2, delta=0.5)

    def test_clock_cap(self):
        power, time = PowerModel(40.0, 0.02, 2e-8), TimeModel(t_mem=1.0, f_crit=1000.0)
        samples, trace = simulate_run(power, time, SamplerModel(), 1200.0, clock_cap=800.0, align=True)
        kernel = trace.intervals[0]
        self.assertAlmostEqual(kernel.duration, time.time(800.0) * 1000.0)
        inside = [s.core_clock for s in samples if kernel.start < s.t <= kernel.end]
        self.assertEqual(set(inside), {800.0})
        self.assertEqual(samples[0].core_clock, 1200.0)
        self.assertAlmostEqual(kernel_energy(samples, trace), analytic_energy(power, time, 800.0), places=6)

    def test_aligned_energy_matches_model(self):
        power, time = PowerModel(35.0, 0.03, 5e-8), TimeModel(t_mem=1.2, f_crit=900.0)
        sampler = SamplerModel(requested_period=10.0, jitter=2.0, latency=4.2, seed=4)
        for f in (1300.0, 900.0, 600.0):
            samples, trace = simulate_run(power, time, sampler, f, align=True)
            expected = analytic_energy(power, time, f)
            self.assertLessEqual(abs(kernel_energy(samples, trace) - expected), 1e-6 * expected)

    def test_unaligned_energy_is_close(self):
        power, time = PowerModel(35.0, 0.03, 5e-8), TimeModel(t_mem=1.2, f_crit=900.0)
        sampler = SamplerModel(requested_period=10.0, jitter=2.0, latency=4.2, seed=4)
        samples, trace = simulate_run(power, time, sampler, 700.0)
        expected = analytic_energy(power, time, 700.0)
        self.assertLessEqual(abs(kernel_energy(samples, trace) - expected), 0.02 * expected)


class TestWriteRun(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_files_parse_back(self):
        samples, trace = simulate_run(PowerModel(40.0, 0.02), TimeModel(t_mem=0.2), SamplerModel(jitter=1.0), 945.0)
        entry = write_run(self.test_dir, "run_945", samples, trace, 945.0)
        self.assertEqual(entry["power_log"], "run_945.power.csv")
        self.assertEqual(entry["requested_mhz"], 945.0)
        parsed = read_power_log(os.path.join(self.test_dir, entry["power_log"]))
        self.assertEqual(parsed, samples)
        parsed_trace = read_kernel_trace(os.path.join(self.test_dir, entry["trace_log"]))
        self.assertEqual(parsed_trace.intervals, trace.intervals)


class TestSweepPoints(unittest.TestCase):
    def test_optimum_recovered(self):
        model = canonical_models()["A"]
        grid = allowed_frequencies(model.device)
        points = simulate_sweep_points(model.power, model.time, SamplerModel(), FftConfig(n=16384), grid, align=True)
        self.assertEqual([p.frequency for p in points], grid)
        self.assertEqual(optimal_frequency(points), analytic_optimum(model.power, model.time, grid))
        self.assertEqual(optimal_frequency(points), 1000.0)
        for point in points:
            self.assertAlmostEqual(point.exec_time_s, model.time.time(point.frequency))

    def test_seeded_points_repeat(self):
        model = canonical_models()["B"]
        sampler = SamplerModel(jitter=2.0)
        first = simulate_sweep_points(model.power, model.time, sampler, FftConfig(n=1024), [1000.0, 700.0], seed=5)
        second = simulate_sweep_points(model.power, model.time, sampler, FftConfig(n=1024), [1000.0, 700.0], seed=5)
        self.assertEqual(first, second)


if __name__ == '__main__':
    unittest.main()
