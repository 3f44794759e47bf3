"""
Real-time feasibility and clock-locking plans for processing pipelines.

A plan is a list of lock/reset commands placed around the pipeline stages
that should run at a fixed core clock. Plans are documents for an external
executor; nothing here talks to a driver. The executor must apply the
commands one at a time, in order.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence

import yaml

from .core import DeviceSpec, allowed_frequencies, on_grid
from .errors import GridError, InvalidPipeline, MissingInput
from .reports import atomic_write_text

logger = logging.getLogger(__name__)

FRACTION_TOLERANCE = 1e-9
PLAN_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RealTimeBudget:
    """Acquisition time t_a and processing time t_p of one data chunk, in seconds."""

    t_acquire: float
    t_process: float

    def __post_init__(self):
        if not (self.t_acquire > 0 and self.t_process > 0):
            raise ValueError("Acquisition and processing times must be positive")


def speedup(budget: RealTimeBudget) -> float:
    """Real-time speed-up S = t_a / t_p."""
    return budget.t_acquire / budget.t_process


def is_real_time(budget: RealTimeBudget) -> bool:
    return speedup(budget) >= 1.0


def required_hardware_scale(time_increase_pct: float, buffer_s: float = 1.0) -> float:
    """
    Hardware needed to stay real-time after slowing down.

    Assumes the work splits evenly across additional GPUs, which holds for
    independent transforms that fit on one card but not for workloads
    limited by inter-GPU communication.

    Args:
        time_increase_pct: Execution time increase in percent
        buffer_s: Real-time speed-up S of the pipeline before the slowdown

    Returns:
        float: Multiplier of the current hardware, at least 1
    """
    if not (buffer_s > 0):
        raise ValueError(f"Speed-up must be positive, got {buffer_s}")
    return max(1.0, (1.0 + time_increase_pct / 100.0) / buffer_s)


@dataclass(frozen=True)
class PipelineStage:
    name: str
    time_fraction: float
    locked_frequency: Optional[float] = None
    expected_gain: Optional[float] = None


class PlanAction(Enum):
    LOCK = "lock"
    RESET = "reset"


@dataclass(frozen=True)
class PlanCommand:
    """Lock is applied before ``stage`` starts, reset after it ends."""

    stage: str
    action: PlanAction
    min_mhz: Optional[float] = None
    max_mhz: Optional[float] = None


@dataclass(frozen=True)
class FrequencyPlan:
    commands: tuple = ()

    def __len__(self) -> int:
        return len(self.commands)

    def locked_stages(self, stages: Sequence[PipelineStage]) -> List[str]:
        """Names of the stages that run between a lock and its reset."""
        names = [s.name for s in stages]
        locked = []
        open_at = None
        for command in self.commands:
            index = names.index(command.stage)
            if command.action is PlanAction.LOCK:
                open_at = index
            else:
                locked.extend(names[open_at:index + 1])
                open_at = None
        return locked


def _check_fractions(stages: Sequence[PipelineStage]) -> None:
    if not stages:
        raise InvalidPipeline("Pipeline has no stages")
    if any(s.time_fraction < 0 for s in stages):
        raise InvalidPipeline("Stage time fractions must be non-negative")
    total = sum(s.time_fraction for s in stages)
    if abs(total - 1.0) > FRACTION_TOLERANCE:
        raise InvalidPipeline(f"Stage time fractions sum to {total}, expected 1")


def expected_pipeline_gain(stages: Sequence[PipelineStage]) -> float:
    """
    First-order efficiency increase of a whole pipeline.

    Each stage contributes its own gain weighted by its share of the
    execution time; stages without a gain contribute nothing.
    """
    _check_fractions(stages)
    return sum(s.time_fraction * (s.expected_gain or 0.0) for s in stages)


def build_clock_plan(stages: Sequence[PipelineStage], device: DeviceSpec, grid: Optional[Sequence[float]] = None) -> FrequencyPlan:
    """
    Bracket locked stages with lock/reset commands.

    Neighbouring stages locked to the same frequency share one lock/reset
    pair.

    Raises:
        GridError: If a locked frequency is not allowed on the device
    """
    grid = allowed_frequencies(device) if grid is None else grid
    commands = []
    open_stage = None
    open_frequency = None
    last_locked = None

    def close():
        commands.append(PlanCommand(stage=last_locked, action=PlanAction.RESET))

    for stage in stages:
        frequency = stage.locked_frequency
        if frequency is not None and not on_grid(frequency, grid):
            raise GridError(f"Stage {stage.name!r}: {frequency} MHz is not an allowed frequency of {device.name}")

        if open_stage is not None and frequency == open_frequency:
            logger.debug("Coalescing %r into the lock opened at %r", stage.name, open_stage)
            last_locked = stage.name
            continue
        if open_stage is not None:
            close()
            open_stage = None
        if frequency is not None:
            commands.append(PlanCommand(stage=stage.name, action=PlanAction.LOCK, min_mhz=frequency, max_mhz=frequency))
            open_stage, open_frequency, last_locked = stage.name, frequency, stage.name

    if open_stage is not None:
        close()
    return FrequencyPlan(commands=tuple(commands))


def apply_mean_optimal(stages: Sequence[PipelineStage], stage_name: str, frequency: float) -> List[PipelineStage]:
    """Return the stages with ``stage_name`` locked to ``frequency``."""
    if stage_name not in {s.name for s in stages}:
        raise InvalidPipeline(f"Pipeline has no stage named {stage_name!r}")
    return [replace(s, locked_frequency=frequency) if s.name == stage_name else s for s in stages]


def load_pipeline(path: str) -> List[PipelineStage]:
    """
    Read a pipeline description.

    The YAML document holds ``stages``, a list of mappings with ``name``,
    ``time_fraction`` and the optional ``locked_mhz`` and ``expected_gain``.
    """
    if not os.path.exists(path):
        raise MissingInput(f"Pipeline file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise InvalidPipeline(f"{path}: invalid YAML: {e}") from None

    stages = []
    for entry in document.get("stages") or []:
        try:
            stages.append(PipelineStage(
                name=str(entry["name"]),
                time_fraction=float(entry["time_fraction"]),
                locked_frequency=None if entry.get("locked_mhz") is None else float(entry["locked_mhz"]),
                expected_gain=None if entry.get("expected_gain") is None else float(entry["expected_gain"]),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidPipeline(f"{path}: bad stage {entry!r}: {e}") from None
    _check_fractions(stages)
    return stages


def plan_to_dict(plan: FrequencyPlan, device: Optional[str] = None) -> dict:
    return {
        "schema_version": PLAN_SCHEMA_VERSION,
        "device": device,
        "commands": [
            {"stage": c.stage, "action": c.action.value, "min_mhz": c.min_mhz, "max_mhz": c.max_mhz}
            for c in plan.commands
        ],
    }


def plan_from_dict(data: dict) -> FrequencyPlan:
    return FrequencyPlan(commands=tuple(
        PlanCommand(stage=c["stage"], action=PlanAction(c["action"]), min_mhz=c.get("min_mhz"), max_mhz=c.get("max_mhz"))
        for c in data.get("commands") or []
    ))


def write_plan(plan: FrequencyPlan, path: str, device: Optional[str] = None) -> str:
    return atomic_write_text(path, yaml.safe_dump(plan_to_dict(plan, device), sort_keys=False))


def _mhz(value: float) -> str:
    return f"{value:g}"


def emit_shell(plan: FrequencyPlan, gpu_index: int = 0) -> str:
    """
    Render a plan as a shell script of nvidia-smi calls.

    Lock maps to ``nvidia-smi -i <gpu> --lock-gpu-clocks=<min>,<max>`` and
    reset to ``nvidia-smi -i <gpu> --reset-gpu-clocks``. The pipeline hooks
    are left as comments for the integrator to fill in.
    """
    lines = ["#!/bin/sh", "set -e", ""]
    for command in plan.commands:
        if command.action is PlanAction.LOCK:
            lines.append(f"# before stage: {command.stage}")
            lines.append(f"nvidia-smi -i {gpu_index} --lock-gpu-clocks={_mhz(command.min_mhz)},{_mhz(command.max_mhz)}")
        else:
            lines.append(f"# after stage: {command.stage}")
            lines.append(f"nvidia-smi -i {gpu_index} --reset-gpu-clocks")
    return "\n".join(lines) + "\n"
