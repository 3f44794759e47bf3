from .core import DeviceSpec, FftConfig, KernelInterval, PowerSample, Precision, allowed_frequencies
from .catalog import DeviceCatalog, load_catalog
from .ingest import PowerLogFormat, TraceLog, parse_kernel_trace, parse_power_log
from .attribution import FrequencyStatus, FrequencyVerdict, LocalizedKernel, localize_interval, verify_frequency
from .metrics import EnergyReport, energy, energy_report
from .sweep import Behavior, SweepPoint, SweepResult, build_sweep, mean_optimal_frequency, optimal_frequency
from .rtplan import FrequencyPlan, PipelineStage, RealTimeBudget, build_clock_plan
from .synthdev import (
    PowerModel,
    SamplerModel,
    TimeModel,
    analytic_energy,
    analytic_optimum,
    random_models,
    simulate_run,
    simulate_sweep_points,
)
from .analysis import analyze_run, analyze_sweep

__all__ = [
    'DeviceSpec',
    'FftConfig',
    'KernelInterval',
    'PowerSample',
    'Precision',
    'allowed_frequencies',
    'DeviceCatalog',
    'load_catalog',
    'PowerLogFormat',
    'TraceLog',
    'parse_kernel_trace',
    'parse_power_log',
    'FrequencyStatus',
    'FrequencyVerdict',
    'LocalizedKernel',
    'localize_interval',
    'verify_frequency',
    'EnergyReport',
    'energy',
    'energy_report',
    'Behavior',
    'SweepPoint',
    'SweepResult',
    'build_sweep',
    'mean_optimal_frequency',
    'optimal_frequency',
    'FrequencyPlan',
    'PipelineStage',
    'RealTimeBudget',
    'build_clock_plan',
    'PowerModel',
    'SamplerModel',
    'TimeModel',
    'analytic_energy',
    'analytic_optimum',
    'random_models',
    'simulate_run',
    'simulate_sweep_points',
    'analyze_run',
    'analyze_sweep',
]
