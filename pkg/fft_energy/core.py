"""
Domain types and workload math.

Holds the immutable value types shared by every other module (power
samples, kernel intervals, device specifications, FFT configurations)
together with the pure functions that describe the FFT workload:
allowed core clock grids, batch sizing, the FLOPS model and the
Cooley-Tukey/Bluestein length classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .errors import (
    BatchTooSmall,
    ConfigError,
    GridMismatch,
    InvalidDuration,
    MissingReference,
)

# Frequencies are compared and generated at this resolution (MHz).
FREQ_EPS = 1e-6

# Largest prime the FFT library decomposes natively.
MAX_RADIX_PRIME = 127


class Precision(Enum):
    """Floating-point precision of a complex-to-complex transform."""

    FP16 = "FP16"
    FP32 = "FP32"
    FP64 = "FP64"

    @property
    def byte_size(self) -> int:
        """Bytes of one complex element (two reals)."""
        return _BYTE_SIZES[self]

    @classmethod
    def parse(cls, text) -> "Precision":
        if isinstance(text, Precision):
            return text
        key = str(text).strip().lower()
        try:
            return cls(_PRECISION_ALIASES[key])
        except KeyError:
            raise ConfigError(f"Unknown precision: {text!r}") from None


_BYTE_SIZES = {Precision.FP16: 4, Precision.FP32: 8, Precision.FP64: 16}

_PRECISION_ALIASES = {
    "fp16": "FP16", "half": "FP16",
    "fp32": "FP32", "float": "FP32", "single": "FP32",
    "fp64": "FP64", "double": "FP64",
}


class FftAlgorithm(Enum):
    COOLEY_TUKEY = "CooleyTukey"
    BLUESTEIN = "Bluestein"


@dataclass(frozen=True)
class PowerSample:
    """One reading of the power sampler.

    Attributes:
        t: Timestamp in milliseconds on the capture clock
        power: Reported board power in watts
        core_clock: Reported core clock in MHz, None when the log has no clock
        mem_clock: Reported memory clock in MHz, None when absent
    """

    t: float
    power: float
    core_clock: Optional[float] = None
    mem_clock: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"Timestamp must be finite, got {self.t}")
        if not (self.power >= 0):
            raise ValueError(f"Power must be non-negative, got {self.power}")
        if self.core_clock is not None and not (self.core_clock > 0):
            raise ValueError(f"Core clock must be positive, got {self.core_clock}")


@dataclass(frozen=True)
class KernelInterval:
    """One kernel execution window, timestamps in milliseconds."""

    start: float
    end: float
    name: str = ""

    def __post_init__(self):
        if not (self.end > self.start):
            raise ValueError(f"Kernel {self.name!r} must end after it starts ({self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DeviceSpec:
    """Clock grid and memory description of one GPU model.

    Either ``step_pattern`` (alternating decrements applied from ``f_max``
    downwards, first listed step first) or an explicit descending
    ``frequencies`` list describes the allowed core clocks; the explicit
    list takes precedence.
    """

    name: str
    f_max: float
    f_min: float
    step_pattern: Tuple[float, ...] = ()
    boost_clock: Optional[float] = None
    base_clock: Optional[float] = None
    mem_size: int = 0
    tdp: Optional[float] = None
    frequencies: Optional[Tuple[float, ...]] = None
    high_error: bool = False

    def __post_init__(self):
        object.__setattr__(self, "step_pattern", tuple(float(s) for s in self.step_pattern))
        if self.frequencies is not None:
            object.__setattr__(self, "frequencies", tuple(float(f) for f in self.frequencies))
        if self.f_min > self.f_max:
            raise ConfigError(f"{self.name}: f_min {self.f_min} exceeds f_max {self.f_max}")
        if any(step <= 0 for step in self.step_pattern):
            raise ConfigError(f"{self.name}: every step must be positive")
        if self.frequencies is None and not self.step_pattern and self.f_min != self.f_max:
            raise ConfigError(f"{self.name}: needs a step pattern or an explicit frequency list")
        if self.frequencies is not None:
            freqs = self.frequencies
            if not freqs:
                raise ConfigError(f"{self.name}: explicit frequency list is empty")
            if any(b >= a for a, b in zip(freqs, freqs[1:])):
                raise ConfigError(f"{self.name}: explicit frequencies must be strictly decreasing")
            if abs(freqs[0] - self.f_max) > FREQ_EPS or abs(freqs[-1] - self.f_min) > FREQ_EPS:
                raise ConfigError(f"{self.name}: explicit frequencies must run from f_max to f_min")

    @property
    def max_step(self) -> float:
        """Largest distance between neighbouring grid frequencies."""
        if self.frequencies is not None and len(self.frequencies) > 1:
            return max(a - b for a, b in zip(self.frequencies, self.frequencies[1:]))
        return max(self.step_pattern, default=0.0)


@dataclass(frozen=True)
class FftConfig:
    """One FFT workload: length, precision, memory budget and repeats.

    Attributes:
        n: FFT length (complex points)
        precision: Element precision
        memory_bytes: Input data budget per batch (M_GB, in bytes)
        n_runs: Number of repeated batch runs (N_b)
    """

    n: int
    precision: Precision = Precision.FP32
    memory_bytes: int = 2 * 1024 ** 3
    n_runs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "precision", Precision.parse(self.precision))
        if self.n < 2:
            raise ConfigError(f"FFT length must be at least 2, got {self.n}")
        if self.n_runs < 1:
            raise ConfigError(f"Number of runs must be at least 1, got {self.n_runs}")
        if self.memory_bytes < self.n * self.precision.byte_size:
            raise BatchTooSmall(
                f"Memory budget {self.memory_bytes} B cannot hold one FFT of length "
                f"{self.n} ({self.n * self.precision.byte_size} B)"
            )


def allowed_frequencies(spec: DeviceSpec) -> List[float]:
    """
    List the core clocks a device accepts, from f_max down to f_min.

    Args:
        spec: Device specification

    Returns:
        list: Strictly decreasing frequencies in MHz

    Raises:
        GridMismatch: If the step pattern overshoots f_min
    """
    if spec.frequencies is not None:
        return list(spec.frequencies)

    grid = [float(spec.f_max)]
    if spec.f_max - spec.f_min <= FREQ_EPS:
        return grid

    index = 0
    current = float(spec.f_max)
    while current - spec.f_min > FREQ_EPS:
        step = spec.step_pattern[index % len(spec.step_pattern)]
        current = round(current - step, 6)
        if current < spec.f_min - FREQ_EPS:
            raise GridMismatch(
                f"{spec.name}: step pattern {list(spec.step_pattern)} from {spec.f_max} "
                f"passes {spec.f_min} without hitting it (last {grid[-1]}); "
                f"list the frequencies explicitly in the catalog"
            )
        grid.append(current)
        index += 1

    grid[-1] = float(spec.f_min)
    return grid


def on_grid(frequency: float, grid: Sequence[float]) -> bool:
    return any(abs(frequency - f) <= FREQ_EPS for f in grid)


def snap_to_grid(frequency: float, grid: Sequence[float]) -> float:
    """Return the grid member nearest to ``frequency`` (ties go to the higher one)."""
    if not grid:
        raise ConfigError("Cannot snap to an empty grid")
    return min(grid, key=lambda f: (abs(f - frequency), -f))


def reference_frequency(spec: DeviceSpec, which: str = "boost", grid: Optional[Sequence[float]] = None) -> float:
    """
    Pick the grid frequency used as the default operating point.

    Args:
        spec: Device specification
        which: "boost" or "base"
        grid: Allowed frequencies (generated from ``spec`` when omitted)

    Returns:
        float: Highest grid frequency not above the chosen clock
    """
    grid = allowed_frequencies(spec) if grid is None else grid
    if which == "boost":
        clock = spec.boost_clock if spec.boost_clock is not None else spec.f_max
    elif which == "base":
        if spec.base_clock is None:
            raise MissingReference(f"{spec.name} has no base clock")
        clock = spec.base_clock
    else:
        raise ConfigError(f"Reference must be 'boost' or 'base', got {which!r}")

    candidates = [f for f in grid if f <= clock + FREQ_EPS]
    if not candidates:
        raise MissingReference(f"{spec.name}: no grid frequency at or below {which} clock {clock}")
    return max(candidates)


def _batch_count(memory_bytes: int, n: int, byte_size: int) -> int:
    transform_bytes = n * byte_size
    if memory_bytes < transform_bytes:
        raise BatchTooSmall(f"Memory budget {memory_bytes} B is smaller than one transform ({transform_bytes} B)")
    return int(memory_bytes // transform_bytes)


def n_fft(config: FftConfig) -> int:
    """Number of transforms that fill the memory budget (floored)."""
    return _batch_count(config.memory_bytes, config.n, config.precision.byte_size)


def flops(config: FftConfig, t: float, n_fft_count: Optional[int] = None) -> float:
    """
    Computational performance of a run.

    Args:
        config: FFT workload
        t: Duration of the whole run in seconds
        n_fft_count: Transforms per batch, derived from the memory budget when omitted

    Returns:
        float: 5 N log2(N) N_b N_FFT / t in FLOPS
    """
    if not (t > 0):
        raise InvalidDuration(f"Duration must be positive, got {t}")
    count = n_fft(config) if n_fft_count is None else n_fft_count
    return 5.0 * config.n * math.log2(config.n) * config.n_runs * count / t


def _primes_up_to(limit: int) -> List[int]:
    sieve = [True] * (limit + 1)
    sieve[0:2] = [False, False]
    for i in range(2, int(limit ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = [False] * len(sieve[i * i::i])
    return [i for i, prime in enumerate(sieve) if prime]


_RADIX_PRIMES = _primes_up_to(MAX_RADIX_PRIME)


def classify_fft_length(n: int) -> FftAlgorithm:
    """Cooley-Tukey when every prime factor of ``n`` is at most 127, else Bluestein."""
    if n < 2:
        raise ConfigError(f"FFT length must be at least 2, got {n}")
    remainder = n
    for p in _RADIX_PRIMES:
        while remainder % p == 0:
            remainder //= p
        if remainder == 1:
            break
    return FftAlgorithm.COOLEY_TUKEY if remainder == 1 else FftAlgorithm.BLUESTEIN


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def validate_config(config: FftConfig) -> FftConfig:
    """Reject workloads the FFT library cannot run (half precision needs 2^k lengths)."""
    if config.precision is Precision.FP16 and not is_power_of_two(config.n):
        raise ConfigError(f"FP16 transforms require a power-of-two length, got {config.n}")
    return config


def single_fft_time(t_fix: float, n_fft_count: int) -> float:
    """Execution time of one FFT inside a batch: t_fix / N_FFT."""
    if n_fft_count < 1:
        raise BatchTooSmall(f"Batch must contain at least one FFT, got {n_fft_count}")
    return t_fix / n_fft_count


def fixed_data_time(t_single: float, n_fft_count: int) -> float:
    """Time to process the whole batch given the time of one FFT."""
    if n_fft_count < 1:
        raise BatchTooSmall(f"Batch must contain at least one FFT, got {n_fft_count}")
    return t_single * n_fft_count
