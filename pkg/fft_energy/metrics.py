"""
Energy, efficiency and measurement-error metrics.

Energy is the rectangle sum of reported power times the time since the
previous sample, so the first sample of a log contributes nothing. For a
LocalizedKernel each window is scaled by its inside share instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .attribution import LocalizedKernel
from .core import FftConfig, PowerSample, flops
from .errors import DegenerateData, InsufficientData, InvalidEnergy

MS_PER_S = 1000.0


@dataclass(frozen=True)
class EnergyReport:
    """
    Energy and efficiency of one run.

    Attributes:
        energy_j: Energy E_f in joules
        duration_s: Duration t of the whole run in seconds
        avg_power_w: energy_j / duration_s
        efficiency_flops_per_w: E_ef in FLOPS/W (FLOPs per joule)
        c_p: Computational performance in FLOPS
    """

    energy_j: float
    duration_s: float
    avg_power_w: float
    efficiency_flops_per_w: float
    c_p: float

    def __post_init__(self):
        if self.energy_j < 0:
            raise InvalidEnergy(f"Energy must be non-negative, got {self.energy_j}")

    def to_dict(self) -> dict:
        return {
            "energy_j": self.energy_j,
            "duration_s": self.duration_s,
            "avg_power_w": self.avg_power_w,
            "efficiency_flops_per_w": self.efficiency_flops_per_w,
            "c_p": self.c_p,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EnergyReport":
        return cls(**{key: float(data[key]) for key in (
            "energy_j", "duration_s", "avg_power_w", "efficiency_flops_per_w", "c_p")})


@dataclass(frozen=True)
class ErrorEstimate:
    rel_std: float
    propagated_increase_error: float


def energy(source: Union[LocalizedKernel, Sequence[PowerSample]], window_ms: Optional[float] = None) -> float:
    """
    Integrate reported power over time.

    Args:
        source: A LocalizedKernel, or plain samples in time order
        window_ms: For a single plain sample, the length of its window in milliseconds

    Returns:
        float: Energy in joules

    Raises:
        InsufficientData: For a single sample without an explicit window
    """
    if isinstance(source, LocalizedKernel):
        total = 0.0
        for sample, weight, start in zip(source.samples, source.weights, source.window_starts):
            if start is None or weight == 0:
                continue
            total += sample.power * (sample.t - start) * weight
        return total / MS_PER_S

    samples = list(source)
    if len(samples) == 1 and window_ms is not None:
        return samples[0].power * window_ms / MS_PER_S
    if len(samples) < 2:
        raise InsufficientData("Energy needs at least two samples or one sample with an explicit window")
    times = np.array([s.t for s in samples], dtype=float)
    powers = np.array([s.power for s in samples], dtype=float)
    return float(np.sum(powers[1:] * np.diff(times))) / MS_PER_S


def efficiency(c_p: float, t: float, energy_j: float) -> float:
    """E_ef = C_p * t / E_f in FLOPS/W."""
    if not (energy_j > 0):
        raise InvalidEnergy(f"Energy must be positive, got {energy_j}")
    return c_p * t / energy_j


def efficiency_increase(e_opt: float, e_ref: float) -> float:
    """I_ef = E_ef,o / E_ef,d."""
    if not (e_ref > 0):
        raise InvalidEnergy(f"Reference efficiency must be positive, got {e_ref}")
    return e_opt / e_ref


def relative_std(values: Iterable[float]) -> float:
    """Sample standard deviation over the mean of repeated measurements."""
    values = np.asarray(list(values), dtype=float)
    if values.size < 2:
        raise InsufficientData("Relative standard deviation needs at least two values")
    mean = float(np.mean(values))
    if mean == 0:
        raise DegenerateData("Mean of the values is zero")
    return float(np.std(values, ddof=1)) / abs(mean)


def propagate_increase_error(rel_std: float, rel_std_ref: Optional[float] = None) -> float:
    """
    Relative error of the efficiency increase.

    With one relative error shared by the optimal and the reference
    efficiency this is sqrt(2) * rel_std; given both it is
    sqrt(rel_std**2 + rel_std_ref**2).
    """
    if rel_std < 0 or (rel_std_ref is not None and rel_std_ref < 0):
        raise ValueError("Relative errors must be non-negative")
    if rel_std_ref is None:
        return math.sqrt(2.0) * rel_std
    return math.hypot(rel_std, rel_std_ref)


def error_estimate(values: Iterable[float]) -> ErrorEstimate:
    rel = relative_std(values)
    return ErrorEstimate(rel_std=rel, propagated_increase_error=propagate_increase_error(rel))


def percent(ratio: float) -> float:
    """Express a ratio as a percent change, rounded to one decimal."""
    return round(100.0 * (ratio - 1.0), 1)


def flops_change_pct(c_opt: float, c_ref: float) -> float:
    if not (c_ref > 0):
        raise InvalidEnergy(f"Reference performance must be positive, got {c_ref}")
    return 100.0 * (c_opt / c_ref - 1.0)


def energy_report(
    source: Union[LocalizedKernel, Sequence[PowerSample]],
    config: FftConfig,
    duration_s: Optional[float] = None,
    n_fft_count: Optional[int] = None,
) -> EnergyReport:
    """
    Build the EnergyReport of one run.

    Args:
        source: Attributed samples of the run (or plain samples covering it)
        config: FFT workload, used for the FLOPS model
        duration_s: Run duration; defaults to the localized interval length
        n_fft_count: Override for the number of FFTs per batch

    Returns:
        EnergyReport
    """
    e = energy(source)
    if duration_s is None:
        if isinstance(source, LocalizedKernel):
            duration_s = source.interval.duration / MS_PER_S
        else:
            duration_s = (source[-1].t - source[0].t) / MS_PER_S
    c_p = flops(config, duration_s, n_fft_count=n_fft_count)
    return EnergyReport(
        energy_j=e,
        duration_s=duration_s,
        avg_power_w=e / duration_s,
        efficiency_flops_per_w=efficiency(c_p, duration_s, e),
        c_p=c_p,
    )
