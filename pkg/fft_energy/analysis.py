"""
End-to-end analysis of captured runs.

Ties ingest, attribution and metrics together for one manifest run, and
groups runs of a frequency sweep into a SweepResult.
"""

import logging
from typing import List, Optional, Sequence

from .attribution import (
    FrequencyStatus,
    check_sampling_criterion,
    default_tolerance,
    effective_sampling_period,
    localize_interval,
    verify_frequency,
)
from .catalog import DeviceCatalog
from .errors import InsufficientData, NoData
from .ingest import read_kernel_trace, read_power_log, run_interval, select_kernels, validate_run
from .manifest import RunManifest
from .metrics import energy_report
from .reports import RunAnalysis
from .sweep import SweepPoint, SweepResult, build_sweep, check_same_config

logger = logging.getLogger(__name__)


def analyze_run(
    run: RunManifest,
    catalog: DeviceCatalog,
    tolerance: Optional[float] = None,
    kernel_filter: Optional[str] = None,
) -> RunAnalysis:
    """
    Measure the energy of one captured run.

    Args:
        run: Manifest entry pointing at the power log and kernel trace
        catalog: Device catalog used for the clock grid and tolerance
        tolerance: Allowed clock deviation in MHz, one grid step by default
        kernel_filter: Regular expression selecting the FFT kernels; the
            manifest's own filter is used when omitted

    Returns:
        RunAnalysis: Energy report, clock verdict and warnings
    """
    device = catalog.get(run.device)
    config = run.config
    run.check_files()

    samples = read_power_log(run.power_log, run.log_format, epoch_offset_ms=run.power_offset_ms)
    trace = read_kernel_trace(run.trace_log, epoch_offset_ms=run.trace_offset_ms)
    trace = select_kernels(trace, kernel_filter or run.kernel_filter)

    warnings = list(trace.warnings) + validate_run(samples, trace)
    interval = run_interval(trace)
    localized = localize_interval(samples, interval)

    verdict = None
    if all(s.core_clock is not None for s in localized.samples):
        tol = default_tolerance(device) if tolerance is None else tolerance
        verdict = verify_frequency(localized, run.requested_mhz, tol)
        if verdict.status is FrequencyStatus.CAPPED:
            warnings.append(f"{run.label}: requested {run.requested_mhz:g} MHz, device ran at {verdict.achieved_mode:g} MHz")
        elif verdict.status is FrequencyStatus.UNSTABLE:
            warnings.append(f"{run.label}: core clock unstable ({verdict.stable_share:.0%} of samples at {verdict.achieved_mode:g} MHz)")
    else:
        warnings.append(f"{run.label}: no core clock readings, frequency not verified")

    period = None
    sampling_ok = None
    try:
        period = effective_sampling_period(samples)
        sampling_ok = check_sampling_criterion(period)
        if not sampling_ok:
            warnings.append(f"{run.label}: sampling period {period:.1f} ms is too coarse for kernel attribution")
    except InsufficientData:
        warnings.append(f"{run.label}: too few samples to estimate the sampling period")

    report = energy_report(localized, config, n_fft_count=run.n_fft)
    logger.info("%s: %.4f J over %.4f s at %s MHz", run.label, report.energy_j, report.duration_s, run.requested_mhz)
    return RunAnalysis(
        label=run.label,
        device=device.name,
        precision=config.precision.value,
        fft_length=config.n,
        requested_mhz=run.requested_mhz,
        report=report,
        verdict=verdict,
        sampling_period_ms=period,
        sampling_ok=sampling_ok,
        kernels=len(trace),
        warnings=warnings,
    )


def sweep_point(analysis: RunAnalysis) -> SweepPoint:
    return SweepPoint(
        frequency=analysis.requested_mhz,
        energy_j=analysis.report.energy_j,
        exec_time_s=analysis.report.duration_s,
        report=analysis.report,
        verdict=analysis.verdict,
    )


def analyze_sweep(
    runs: Sequence[RunManifest],
    catalog: DeviceCatalog,
    tolerance: Optional[float] = None,
    kernel_filter: Optional[str] = None,
) -> SweepResult:
    """
    Analyze every run of one sweep and combine them.

    Raises:
        ConfigMismatch: If the runs mix devices, precisions or FFT lengths
    """
    if not runs:
        raise NoData("A sweep needs at least one run")
    check_same_config([(run.device, run.config) for run in runs])
    device = catalog.get(runs[0].device)
    analyses: List[RunAnalysis] = [analyze_run(run, catalog, tolerance, kernel_filter) for run in runs]
    return build_sweep(runs[0].config, [sweep_point(a) for a in analyses], device)
