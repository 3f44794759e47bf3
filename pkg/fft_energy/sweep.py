"""
Frequency-sweep analysis.

A sweep holds one point per requested core clock for a single FFT
configuration. From it we pick the optimal frequency (minimum energy per
batch), classify how execution time reacts to lower clocks and build
the efficiency/time trade-off matrix across FFT lengths.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .attribution import FrequencyStatus, FrequencyVerdict
from .core import (
    FREQ_EPS,
    DeviceSpec,
    FftAlgorithm,
    FftConfig,
    Precision,
    allowed_frequencies,
    classify_fft_length,
    flops,
    on_grid,
    reference_frequency,
    snap_to_grid,
)
from .errors import ConfigMismatch, GridError, InvalidDuration, MissingReference, NoData
from .metrics import EnergyReport, efficiency, efficiency_increase, percent, propagate_increase_error, relative_std
from .reports import atomic_write_text

logger = logging.getLogger(__name__)

BEHAVIOR_DELTA = 0.02
BEHAVIOR_GAMMA = 0.10
TRADEOFF_COLUMNS = ["fft_length", "frequency_mhz", "eff_gain_pct", "time_increase_pct"]


class Behavior(Enum):
    """How execution time reacts to lowering the core clock.

    A: decreasing at first; B: slightly increasing; C: increasing notably.
    """

    A = "A"
    B = "B"
    C = "C"


@dataclass(frozen=True)
class SweepPoint:
    frequency: float
    energy_j: float
    exec_time_s: float
    report: EnergyReport
    verdict: Optional[FrequencyVerdict] = None
    rel_std: Optional[float] = None
    repeats: int = 1


@dataclass(frozen=True)
class SweepResult:
    """
    Analysis of one (device, precision, FFT length) sweep.

    Attributes:
        config: FFT workload
        points: Points ordered by descending frequency
        t_default: Execution time at the boost reference frequency (t_d), None
            when the sweep has no point there
        optimal: Frequency with the minimal energy per batch
        behavior: Execution-time behavior, None with fewer than three points or
            without a boost reference point
        device: Catalog name of the device
        boost_mhz: Boost reference frequency on the grid
        base_mhz: Base reference frequency on the grid, None when the device has none
    """

    config: FftConfig
    points: Tuple[SweepPoint, ...]
    t_default: Optional[float]
    optimal: float
    behavior: Optional[Behavior] = None
    device: str = ""
    boost_mhz: Optional[float] = None
    base_mhz: Optional[float] = None

    def point_at(self, frequency: float) -> Optional[SweepPoint]:
        for point in self.points:
            if abs(point.frequency - frequency) <= FREQ_EPS:
                return point
        return None

    def reference_point(self, reference: str = "boost") -> SweepPoint:
        target = self.boost_mhz if reference == "boost" else self.base_mhz
        point = None if target is None else self.point_at(target)
        if point is None:
            raise MissingReference(
                f"Sweep N={self.config.n} on {self.device or 'device'} has no {reference} reference point"
                + (f" at {target} MHz" if target is not None else "")
            )
        return point


@dataclass(frozen=True)
class TradeoffCell:
    fft_length: int
    frequency: float
    efficiency_gain_pct: float
    time_increase_pct: float


@dataclass(frozen=True)
class OptimumSummary:
    """Gains of running one FFT length at its optimal frequency instead of the reference."""

    fft_length: int
    optimal_mhz: float
    reference_mhz: float
    efficiency_increase: float
    efficiency_gain_pct: float
    time_increase_pct: float
    flops_change_pct: float
    increase_error: Optional[float] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def optimal_frequency(points: Sequence[SweepPoint]) -> float:
    """
    Frequency with the least energy per batch.

    Ties (equal energies to 1e-12 relative) go to the higher frequency.
    """
    if not points:
        raise NoData("Cannot pick an optimal frequency from an empty sweep")
    energies = np.array([p.energy_j for p in points], dtype=float)
    best = energies.min()
    tied = np.isclose(energies, best, rtol=1e-12, atol=0.0)
    return float(max(p.frequency for p, is_tied in zip(points, tied) if is_tied))


def bluestein_exclusion(device: Optional[DeviceSpec]) -> Optional[Callable[[int], bool]]:
    """Exclusion predicate for high-error devices: drop Bluestein lengths."""
    if device is None or not device.high_error:
        return None
    return lambda n: classify_fft_length(n) is FftAlgorithm.BLUESTEIN


def mean_optimal_frequency(
    optima: Sequence[Tuple[int, float]],
    grid: Sequence[float],
    exclude: Optional[Callable[[int], bool]] = None,
) -> float:
    """
    Average optimal frequencies across FFT lengths and snap to the grid.

    Args:
        optima: (FFT length, optimal frequency) pairs
        grid: Allowed frequencies of the device
        exclude: Predicate on the FFT length; matching lengths are left out

    Returns:
        float: Grid frequency nearest the arithmetic mean (ties go up)
    """
    kept = [f for n, f in optima if exclude is None or not exclude(n)]
    if not kept:
        raise NoData("Every optimal frequency was excluded")
    excluded = len(optima) - len(kept)
    if excluded:
        logger.info("Excluded %d of %d lengths from the mean optimal frequency", excluded, len(optima))
    return snap_to_grid(float(np.mean(kept)), grid)


def _frequency_time_pairs(points) -> List[Tuple[float, float]]:
    pairs = []
    for point in points:
        if isinstance(point, SweepPoint):
            pairs.append((point.frequency, point.exec_time_s))
        else:
            frequency, exec_time = point
            pairs.append((float(frequency), float(exec_time)))
    return sorted(pairs, key=lambda pair: -pair[0])


def classify_behavior(points, t_default: float, delta: float = BEHAVIOR_DELTA, gamma: float = BEHAVIOR_GAMMA) -> Behavior:
    """
    Classify the execution-time curve of a sweep.

    Only the upper half of the swept range (f at or above the midpoint of
    the highest and lowest frequency) is inspected. A when t_f/t_d drops
    below 1 - delta somewhere, C when it exceeds 1 + gamma, B otherwise.

    Args:
        points: SweepPoint objects or (frequency, exec_time) pairs
        t_default: Default execution time t_d
        delta: Dip threshold
        gamma: Rise threshold

    Returns:
        Behavior
    """
    pairs = _frequency_time_pairs(points)
    if len(pairs) < 3:
        raise NoData(f"Behavior classification needs at least three points, got {len(pairs)}")
    if not (t_default > 0):
        raise InvalidDuration(f"Default execution time must be positive, got {t_default}")

    midpoint = (pairs[0][0] + pairs[-1][0]) / 2.0
    ratios = np.array([t / t_default for f, t in pairs if f >= midpoint - FREQ_EPS])
    if ratios.min() < 1.0 - delta:
        return Behavior.A
    if ratios.max() > 1.0 + gamma:
        return Behavior.C
    return Behavior.B


def time_increase(t_f: float, t_d: float) -> float:
    """Execution time change relative to the default, in percent."""
    if not (t_d > 0):
        raise InvalidDuration(f"Default execution time must be positive, got {t_d}")
    return 100.0 * (t_f / t_d - 1.0)


def _merge_repeats(config: FftConfig, frequency: float, group: List[SweepPoint]) -> SweepPoint:
    if len(group) == 1:
        return group[0]
    energies = [p.energy_j for p in group]
    mean_energy = float(np.mean(energies))
    mean_time = float(np.mean([p.exec_time_s for p in group]))
    c_p = flops(config, mean_time)
    report = EnergyReport(
        energy_j=mean_energy,
        duration_s=mean_time,
        avg_power_w=mean_energy / mean_time,
        efficiency_flops_per_w=efficiency(c_p, mean_time, mean_energy),
        c_p=c_p,
    )
    verdicts = [p.verdict for p in group if p.verdict is not None]
    verdict = next((v for v in verdicts if v.status is not FrequencyStatus.OK), verdicts[0] if verdicts else None)
    return SweepPoint(
        frequency=frequency,
        energy_j=mean_energy,
        exec_time_s=mean_time,
        report=report,
        verdict=verdict,
        rel_std=relative_std(energies),
        repeats=len(group),
    )


def build_sweep(
    config: FftConfig,
    points: Sequence[SweepPoint],
    device: DeviceSpec,
    grid: Optional[Sequence[float]] = None,
    delta: float = BEHAVIOR_DELTA,
    gamma: float = BEHAVIOR_GAMMA,
) -> SweepResult:
    """
    Assemble a SweepResult from measured points.

    Repeated runs at the same frequency are averaged and their relative
    standard deviation kept on the merged point.

    Raises:
        GridError: If a point frequency is not on the device grid
        NoData: If there are no points
    """
    if not points:
        raise NoData("A sweep needs at least one point")
    grid = allowed_frequencies(device) if grid is None else list(grid)

    groups: "OrderedDict[float, List[SweepPoint]]" = OrderedDict()
    for point in points:
        if not on_grid(point.frequency, grid):
            raise GridError(f"{point.frequency} MHz is not an allowed frequency of {device.name}")
        key = snap_to_grid(point.frequency, grid)
        groups.setdefault(key, []).append(point)

    merged = [_merge_repeats(config, f, group) for f, group in groups.items()]
    merged.sort(key=lambda p: -p.frequency)

    boost = reference_frequency(device, "boost", grid)
    base = reference_frequency(device, "base", grid) if device.base_clock is not None else None

    default_point = next((p for p in merged if abs(p.frequency - boost) <= FREQ_EPS), None)
    t_default = None if default_point is None else default_point.exec_time_s
    if t_default is None:
        logger.warning("No point at the boost reference %s MHz; behavior not classified", boost)

    behavior = None
    if t_default is not None and len(merged) >= 3:
        behavior = classify_behavior(merged, t_default, delta=delta, gamma=gamma)

    return SweepResult(
        config=config,
        points=tuple(merged),
        t_default=t_default,
        optimal=optimal_frequency(merged),
        behavior=behavior,
        device=device.name,
        boost_mhz=boost,
        base_mhz=base,
    )


def check_same_config(configs: Sequence[Tuple[str, FftConfig]]) -> None:
    """Raise ConfigMismatch unless all (device, config) pairs agree on device, precision and length."""
    if not configs:
        return
    first_device, first = configs[0]
    for device, config in configs[1:]:
        if (device.lower(), config.precision, config.n) != (first_device.lower(), first.precision, first.n):
            raise ConfigMismatch(
                f"Runs mix configurations: {first_device}/{first.precision.value}/N={first.n} "
                f"and {device}/{config.precision.value}/N={config.n}"
            )


def optimum_summary(sweep: SweepResult, reference: str = "boost") -> OptimumSummary:
    """Efficiency, time and FLOPS change of the optimal point against the reference point."""
    ref = sweep.reference_point(reference)
    opt = sweep.point_at(sweep.optimal)
    ratio = efficiency_increase(opt.report.efficiency_flops_per_w, ref.report.efficiency_flops_per_w)
    error = None
    if opt.rel_std is not None and ref.rel_std is not None:
        error = propagate_increase_error(opt.rel_std, ref.rel_std)
    elif opt.rel_std is not None:
        error = propagate_increase_error(opt.rel_std)
    return OptimumSummary(
        fft_length=sweep.config.n,
        optimal_mhz=opt.frequency,
        reference_mhz=ref.frequency,
        efficiency_increase=ratio,
        efficiency_gain_pct=percent(ratio),
        time_increase_pct=round(time_increase(opt.exec_time_s, ref.exec_time_s), 1),
        flops_change_pct=round(100.0 * (opt.report.c_p / ref.report.c_p - 1.0), 1),
        increase_error=error,
    )


def optimal_frequencies(sweeps: Sequence[SweepResult]) -> List[Tuple[int, float]]:
    return [(s.config.n, s.optimal) for s in sweeps]


def mean_optimal_gain(sweeps: Sequence[SweepResult], f_mean: float, reference: str = "boost") -> List[Tuple[int, float, float]]:
    """
    Efficiency gain of each FFT length when run at one shared frequency.

    Returns:
        list: (FFT length, nearest measured frequency, gain in percent)
    """
    gains = []
    for sweep in sweeps:
        ref = sweep.reference_point(reference)
        nearest = min(sweep.points, key=lambda p: (abs(p.frequency - f_mean), -p.frequency))
        ratio = efficiency_increase(nearest.report.efficiency_flops_per_w, ref.report.efficiency_flops_per_w)
        gains.append((sweep.config.n, nearest.frequency, percent(ratio)))
    return gains


def tradeoff_matrix(sweeps: Sequence[SweepResult], reference: str = "boost") -> List[TradeoffCell]:
    """
    Efficiency gain and time increase of every swept point against the reference.

    Cells are ordered by FFT length, then by descending frequency.

    Raises:
        MissingReference: If a sweep lacks its reference point
    """
    cells = []
    for sweep in sorted(sweeps, key=lambda s: s.config.n):
        ref = sweep.reference_point(reference)
        for point in sweep.points:
            ratio = efficiency_increase(point.report.efficiency_flops_per_w, ref.report.efficiency_flops_per_w)
            cells.append(TradeoffCell(
                fft_length=sweep.config.n,
                frequency=point.frequency,
                efficiency_gain_pct=percent(ratio),
                time_increase_pct=round(time_increase(point.exec_time_s, ref.exec_time_s), 1),
            ))
    return cells


def tradeoff_frame(cells: Sequence[TradeoffCell]) -> pd.DataFrame:
    return pd.DataFrame(
        [[c.fft_length, c.frequency, c.efficiency_gain_pct, c.time_increase_pct] for c in cells],
        columns=TRADEOFF_COLUMNS,
    )


def write_tradeoff_csv(cells: Sequence[TradeoffCell], path: str) -> str:
    atomic_write_text(path, tradeoff_frame(cells).to_csv(index=False, lineterminator="\n"))
    return path


def _verdict_to_dict(verdict: Optional[FrequencyVerdict]) -> Optional[dict]:
    if verdict is None:
        return None
    return {
        "requested": verdict.requested,
        "achieved_mode": verdict.achieved_mode,
        "status": verdict.status.value,
        "stable_share": verdict.stable_share,
    }


def _verdict_from_dict(data: Optional[dict]) -> Optional[FrequencyVerdict]:
    if data is None:
        return None
    return FrequencyVerdict(
        requested=float(data["requested"]),
        achieved_mode=float(data["achieved_mode"]),
        status=FrequencyStatus(data["status"]),
        stable_share=float(data.get("stable_share", 1.0)),
    )


def sweep_to_dict(sweep: SweepResult) -> Dict:
    return {
        "device": sweep.device,
        "fft_length": sweep.config.n,
        "precision": sweep.config.precision.value,
        "memory_bytes": sweep.config.memory_bytes,
        "n_runs": sweep.config.n_runs,
        "t_default": sweep.t_default,
        "optimal_mhz": sweep.optimal,
        "behavior": sweep.behavior.value if sweep.behavior else None,
        "boost_mhz": sweep.boost_mhz,
        "base_mhz": sweep.base_mhz,
        "points": [
            {
                "frequency": p.frequency,
                "energy_j": p.energy_j,
                "exec_time_s": p.exec_time_s,
                "report": p.report.to_dict(),
                "verdict": _verdict_to_dict(p.verdict),
                "rel_std": p.rel_std,
                "repeats": p.repeats,
            }
            for p in sweep.points
        ],
    }


def sweep_from_dict(data: Dict) -> SweepResult:
    config = FftConfig(
        n=int(data["fft_length"]),
        precision=Precision.parse(data["precision"]),
        memory_bytes=int(data["memory_bytes"]),
        n_runs=int(data.get("n_runs", 1)),
    )
    points = tuple(
        SweepPoint(
            frequency=float(p["frequency"]),
            energy_j=float(p["energy_j"]),
            exec_time_s=float(p["exec_time_s"]),
            report=EnergyReport.from_dict(p["report"]),
            verdict=_verdict_from_dict(p.get("verdict")),
            rel_std=p.get("rel_std"),
            repeats=int(p.get("repeats", 1)),
        )
        for p in data["points"]
    )
    return SweepResult(
        config=config,
        points=points,
        t_default=None if data.get("t_default") is None else float(data["t_default"]),
        optimal=float(data["optimal_mhz"]),
        behavior=Behavior(data["behavior"]) if data.get("behavior") else None,
        device=data.get("device", ""),
        boost_mhz=data.get("boost_mhz"),
        base_mhz=data.get("base_mhz"),
    )
