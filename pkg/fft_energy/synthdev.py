"""
Synthetic GPU used as ground truth for the analysis pipeline.

Power follows P(f) = p_static + k_lin*f + k_dyn*f**3 and execution time
follows t(f) = t_mem * max(1, f_crit/f), inflated below ``idle_state_f``
to mimic a P-state drop. Energy per run is therefore known in closed
form, and simulate_run produces the power log and kernel trace a real
capture of the same run would yield.

Every random draw comes from ``numpy.random.default_rng`` seeded
explicitly, so a seed reproduces its output byte for byte.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .attribution import localize_interval
from .core import FREQ_EPS, DeviceSpec, FftConfig, KernelInterval, PowerSample
from .ingest import TraceLog, format_kernel_trace, format_smi_csv
from .metrics import energy_report
from .reports import atomic_write_text
from .sweep import SweepPoint

logger = logging.getLogger(__name__)

MS_PER_S = 1000.0
# Idle capture before and after the kernel, in requested sampling periods.
ROLL_PERIODS = 10
KERNEL_NAME = "synthetic_fft"


@dataclass(frozen=True)
class PowerModel:
    p_static: float
    k_lin: float = 0.0
    k_dyn: float = 0.0

    def __post_init__(self):
        if self.p_static < 0 or self.k_lin < 0 or self.k_dyn < 0:
            raise ValueError("Power coefficients must be non-negative")
        if not (self.p_static > 0 or self.k_lin > 0 or self.k_dyn > 0):
            raise ValueError("Power model is zero at every frequency")

    def power(self, f: float) -> float:
        """Board power in watts at core clock ``f`` (MHz)."""
        return self.p_static + self.k_lin * f + self.k_dyn * f ** 3


@dataclass(frozen=True)
class TimeModel:
    """
    Attributes:
        t_mem: Memory-bound execution time floor in seconds
        f_crit: Clock below which the kernel becomes compute bound (MHz)
        idle_state_f: Clocks below this drop into a slower P-state (MHz)
        inflation: Time multiplier applied below ``idle_state_f``
    """

    t_mem: float
    f_crit: float = 0.0
    idle_state_f: float = 0.0
    inflation: float = 1.0

    def __post_init__(self):
        if not (self.t_mem > 0):
            raise ValueError(f"Memory-bound time must be positive, got {self.t_mem}")
        if self.f_crit < 0 or self.idle_state_f < 0:
            raise ValueError("Critical and idle-state frequencies must be non-negative")
        if self.inflation < 1:
            raise ValueError(f"Inflation must be at least 1, got {self.inflation}")

    def time(self, f: float) -> float:
        """Execution time in seconds at core clock ``f`` (MHz)."""
        if not (f > 0):
            raise ValueError(f"Frequency must be positive, got {f}")
        t = self.t_mem * max(1.0, self.f_crit / f)
        if f < self.idle_state_f:
            t *= self.inflation
        return t


@dataclass(frozen=True)
class SamplerModel:
    """
    Power sampler timing.

    The realized period is requested_period + latency + U(-jitter, +jitter),
    all in milliseconds.
    """

    requested_period: float = 10.0
    jitter: float = 0.0
    seed: int = 0
    latency: float = 0.0

    def __post_init__(self):
        if not (self.requested_period > 0):
            raise ValueError(f"Sampling period must be positive, got {self.requested_period}")
        if self.jitter < 0 or self.latency < 0:
            raise ValueError("Jitter and latency must be non-negative")
        if not (self.requested_period + self.latency - self.jitter > 0):
            raise ValueError("Jitter must not allow non-positive sampling periods")

    @property
    def mean_period(self) -> float:
        return self.requested_period + self.latency


@dataclass(frozen=True)
class CanonicalModel:
    """A synthetic device whose execution-time curve has a known behavior."""

    name: str
    power: PowerModel
    time: TimeModel
    device: DeviceSpec


def analytic_energy(power: PowerModel, time: TimeModel, f: float) -> float:
    """Exact energy in joules of one run at ``f``: P(f) * t(f)."""
    return power.power(f) * time.time(f)


def analytic_optimum(power: PowerModel, time: TimeModel, grid: Sequence[float]) -> float:
    """Grid frequency with the least analytic energy, ties going to the higher frequency."""
    if not len(grid):
        raise ValueError("Grid must not be empty")
    frequencies = np.asarray(grid, dtype=float)
    energies = np.array([analytic_energy(power, time, f) for f in frequencies])
    tied = np.isclose(energies, energies.min(), rtol=1e-12, atol=0.0)
    return float(frequencies[tied].max())


def _sample_times(sampler: SamplerModel, rng: np.random.Generator, stop: float) -> np.ndarray:
    count = int(np.ceil(stop / max(sampler.mean_period - sampler.jitter, FREQ_EPS))) + 2
    periods = np.full(count, sampler.mean_period)
    if sampler.jitter > 0:
        periods = periods + rng.uniform(-sampler.jitter, sampler.jitter, size=count)
    times = np.concatenate(([0.0], np.cumsum(periods)))
    last = int(np.searchsorted(times, stop, side="left"))
    return times[:last + 1]


def simulate_run(
    power: PowerModel,
    time: TimeModel,
    sampler: SamplerModel,
    f: float,
    seed=None,
    clock_cap: Optional[float] = None,
    align: bool = False,
) -> Tuple[List[PowerSample], TraceLog]:
    """
    Capture one synthetic FFT run at core clock ``f``.

    The kernel starts after an idle pre-roll and is followed by an idle
    post-roll. Each sample reports the average of the true power over its
    own window (p_static outside the kernel, P(f) inside).

    Args:
        power: Power model
        time: Execution time model
        sampler: Sampler timing
        f: Requested core clock in MHz
        seed: Overrides ``sampler.seed``; anything numpy.random.default_rng accepts
        clock_cap: Highest clock the device actually runs at; samples
            overlapping the kernel report the capped clock
        align: Put a sample exactly on the kernel start and end

    Returns:
        tuple: (samples, trace)
    """
    rng = np.random.default_rng(sampler.seed if seed is None else seed)
    effective = f if clock_cap is None else min(f, clock_cap)
    if clock_cap is not None and effective < f:
        logger.debug("Clock capped from %s to %s MHz", f, effective)

    roll = ROLL_PERIODS * sampler.requested_period
    start = roll
    end = start + time.time(effective) * MS_PER_S
    times = _sample_times(sampler, rng, end + roll)
    if align:
        keep = (np.abs(times - start) > FREQ_EPS) & (np.abs(times - end) > FREQ_EPS)
        times = np.sort(np.concatenate((times[keep], [start, end])))

    p_idle = power.p_static
    p_kernel = power.power(effective)
    samples = []
    for i, t in enumerate(times):
        t = float(t)
        in_kernel = start <= t <= end
        if i == 0:
            reported = p_idle
        else:
            previous = float(times[i - 1])
            overlap = max(0.0, min(t, end) - max(previous, start))
            in_kernel = in_kernel or overlap > 0
            reported = (p_kernel * overlap + p_idle * (t - previous - overlap)) / (t - previous)
        clock = effective if in_kernel else f
        samples.append(PowerSample(t=t, power=reported, core_clock=float(clock)))

    trace = TraceLog(intervals=(KernelInterval(start=start, end=end, name=KERNEL_NAME),), source="synthetic")
    return samples, trace


def write_run(
    out_dir: str,
    label: str,
    samples: Sequence[PowerSample],
    trace: TraceLog,
    requested_mhz: float,
) -> Dict:
    """
    Write one simulated run as SmiCsv and trace CSV files.

    Returns:
        dict: Manifest run entry with paths relative to ``out_dir``
    """
    power_name = f"{label}.power.csv"
    trace_name = f"{label}.trace.csv"
    atomic_write_text(os.path.join(out_dir, power_name), format_smi_csv(samples))
    atomic_write_text(os.path.join(out_dir, trace_name), format_kernel_trace(trace))
    return {
        "label": label,
        "requested_mhz": float(requested_mhz),
        "power_log": power_name,
        "trace_log": trace_name,
    }


def random_model(rng: np.random.Generator) -> Tuple[PowerModel, TimeModel]:
    """Draw a model with execution times of at least one second."""
    power = PowerModel(
        p_static=float(rng.uniform(20.0, 60.0)),
        k_lin=float(rng.uniform(0.0, 0.05)),
        k_dyn=float(rng.uniform(1e-8, 8e-8)),
    )
    time = TimeModel(t_mem=float(rng.uniform(1.0, 2.0)), f_crit=float(rng.uniform(400.0, 1400.0)))
    return power, time


def random_models(count: int, seed: int = 0) -> List[Tuple[PowerModel, TimeModel]]:
    rng = np.random.default_rng(seed)
    return [random_model(rng) for _ in range(count)]


def canonical_models() -> Dict[str, CanonicalModel]:
    """
    Three devices whose time curves classify as behavior A, B and C.

    A: the boost reference sits below f_max, and t(f) is still falling at
    f_max; B: memory bound over the whole upper range; C: compute bound
    from the boost clock down.
    """
    power = PowerModel(p_static=40.0, k_lin=0.02, k_dyn=2e-8)
    fine = (1000.0, 900.0, 800.0, 700.0, 600.0, 500.0, 400.0)
    coarse = (1000.0, 800.0, 600.0, 400.0, 200.0)
    return {
        "A": CanonicalModel(
            name="A",
            power=power,
            time=TimeModel(t_mem=1.0, f_crit=1000.0),
            device=DeviceSpec(name="synthetic-A", f_max=1000.0, f_min=400.0, frequencies=fine, boost_clock=900.0),
        ),
        "B": CanonicalModel(
            name="B",
            power=power,
            time=TimeModel(t_mem=1.0, f_crit=450.0),
            device=DeviceSpec(name="synthetic-B", f_max=1000.0, f_min=400.0, frequencies=fine, boost_clock=1000.0),
        ),
        "C": CanonicalModel(
            name="C",
            power=power,
            time=TimeModel(t_mem=1.0, f_crit=1000.0),
            device=DeviceSpec(name="synthetic-C", f_max=1000.0, f_min=200.0, frequencies=coarse, boost_clock=1000.0),
        ),
    }


def simulate_sweep_points(
    power: PowerModel,
    time: TimeModel,
    sampler: SamplerModel,
    config: FftConfig,
    frequencies: Sequence[float],
    seed: int = 0,
    align: bool = False,
):
    """
    Simulate and analyze one run per frequency.

    Returns:
        list: SweepPoint per frequency, in the given order
    """
    seeds = np.random.SeedSequence(seed).spawn(len(frequencies))
    points = []
    for f, child in zip(frequencies, seeds):
        samples, trace = simulate_run(power, time, sampler, f, seed=child, align=align)
        localized = localize_interval(samples, trace.intervals[0])
        report = energy_report(localized, config)
        points.append(SweepPoint(frequency=float(f), energy_j=report.energy_j, exec_time_s=report.duration_s, report=report))
    return points
