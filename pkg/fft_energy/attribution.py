"""
Alignment of power samples with kernel intervals.

Every sample after the first owns the window (previous timestamp, own
timestamp]; its reported power is taken as constant over that window.
A kernel interval collects the samples whose windows overlap it, with
each window weighted by the share that falls inside the interval.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import FREQ_EPS, DeviceSpec, KernelInterval, PowerSample
from .errors import AttributionError, InsufficientData, InvalidDuration, MissingClockData

logger = logging.getLogger(__name__)

SAMPLING_THRESHOLD_MS = 15.0
CAP_STABILITY = 0.9


@dataclass(frozen=True)
class LocalizedKernel:
    """
    Samples attributed to one kernel interval.

    Attributes:
        interval: The kernel interval
        samples: Attributed samples in time order
        weights: Share of each sample's window inside the interval (0 for samples without a window)
        window_starts: Start of each sample's window, None for the first sample of the log
    """

    interval: KernelInterval
    samples: Tuple[PowerSample, ...]
    weights: Tuple[float, ...]
    window_starts: Tuple[Optional[float], ...]

    def __post_init__(self):
        if not self.samples:
            raise AttributionError(f"Kernel {self.interval.name!r} has no samples")

    @property
    def boundary_fractions(self) -> Tuple[float, float]:
        """Inside share of the first and last sampling window (head, tail)."""
        windowed = [w for w in self.weights if w > 0]
        if not windowed:
            return (0.0, 0.0)
        return (windowed[0], windowed[-1])

    @property
    def weighted_count(self) -> float:
        return float(sum(self.weights))


class FrequencyStatus(Enum):
    OK = "Ok"
    CAPPED = "Capped"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class FrequencyVerdict:
    requested: float
    achieved_mode: float
    status: FrequencyStatus
    stable_share: float = 1.0

    def __post_init__(self):
        if self.status is FrequencyStatus.CAPPED and not self.achieved_mode < self.requested:
            raise ValueError("A capped verdict needs an achieved clock below the requested one")


def localize_interval(samples: Sequence[PowerSample], interval: KernelInterval) -> LocalizedKernel:
    """
    Attribute samples to a single interval.

    Raises:
        AttributionError: If no sample window overlaps the interval
    """
    if not samples:
        raise AttributionError(f"No samples to attribute to kernel {interval.name!r}")

    times = np.array([s.t for s in samples], dtype=float)
    starts = np.concatenate(([np.nan], times[:-1]))
    lengths = times - starts

    overlap = np.minimum(times, interval.end) - np.maximum(starts, interval.start)
    overlap = np.where(np.isnan(overlap), 0.0, np.clip(overlap, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = np.where(lengths > 0, overlap / lengths, 0.0)
    weights = np.clip(np.nan_to_num(weights), 0.0, 1.0)

    inside = (times >= interval.start) & (times <= interval.end)
    selected = np.flatnonzero((overlap > 0) | inside)
    if selected.size == 0:
        raise AttributionError(
            f"Kernel {interval.name!r} [{interval.start}, {interval.end}] ms has no overlapping power sample"
        )

    return LocalizedKernel(
        interval=interval,
        samples=tuple(samples[i] for i in selected),
        weights=tuple(float(weights[i]) for i in selected),
        window_starts=tuple(None if i == 0 else float(starts[i]) for i in selected),
    )


def localize_kernels(samples: Sequence[PowerSample], trace) -> List[LocalizedKernel]:
    """
    Attribute samples to every kernel of a trace.

    Args:
        samples: Power samples in time order
        trace: TraceLog or sequence of KernelInterval

    Returns:
        list: One LocalizedKernel per interval, in trace order
    """
    intervals = getattr(trace, "intervals", trace)
    return [localize_interval(samples, interval) for interval in intervals]


def effective_sampling_period(samples: Sequence[PowerSample]) -> float:
    """Mean time between consecutive samples in milliseconds."""
    if len(samples) < 2:
        raise InsufficientData("Need at least two samples to compute a sampling period")
    return float(np.mean(np.diff([s.t for s in samples])))


def check_sampling_criterion(period_ms: float, threshold_ms: float = SAMPLING_THRESHOLD_MS) -> bool:
    """True when the sampling period is at most ``threshold_ms`` (inclusive)."""
    if not (period_ms > 0):
        raise InvalidDuration(f"Sampling period must be positive, got {period_ms}")
    return period_ms <= threshold_ms


def default_tolerance(device: DeviceSpec) -> float:
    """One grid step: the driver reports quantized clocks."""
    return device.max_step


def verify_frequency(
    localized: LocalizedKernel,
    requested: float,
    tolerance: float,
    stability: float = CAP_STABILITY,
) -> FrequencyVerdict:
    """
    Compare the clock the device reported during a kernel with the requested one.

    The achieved clock is the most frequent reported value (ties go to the
    value nearest the request). The result is Ok when it is within
    ``tolerance`` of the request and Capped when it sits below it; both
    require at least ``stability`` of the samples to be within
    ``tolerance`` of the achieved clock, otherwise the verdict is Unstable.

    Raises:
        MissingClockData: If any attributed sample lacks a core clock
    """
    clocks = [s.core_clock for s in localized.samples]
    if any(c is None for c in clocks):
        raise MissingClockData(f"Kernel {localized.interval.name!r}: power log has no core clock readings")

    values, counts = np.unique(np.array(clocks, dtype=float), return_counts=True)
    top = counts.max()
    candidates = values[counts == top]
    mode = float(min(candidates, key=lambda c: (abs(c - requested), -c)))

    share = float(np.mean(np.abs(np.array(clocks) - mode) <= tolerance + FREQ_EPS))
    stable = share >= stability

    if stable and abs(mode - requested) <= tolerance + FREQ_EPS:
        status = FrequencyStatus.OK
    elif stable and mode < requested - tolerance:
        status = FrequencyStatus.CAPPED
        logger.warning("Requested %s MHz but the device ran at %s MHz (capped)", requested, mode)
    else:
        status = FrequencyStatus.UNSTABLE
        logger.warning("Clock unstable during %r: mode %s MHz held by %.0f%% of samples",
                       localized.interval.name, mode, 100 * share)
    return FrequencyVerdict(requested=float(requested), achieved_mode=mode, status=status, stable_share=share)


def verify_run_frequency(samples, interval: KernelInterval, requested: float, tolerance: float) -> FrequencyVerdict:
    return verify_frequency(localize_interval(samples, interval), requested, tolerance)
