"""
Run manifests: which files make up a run and what was measured.

A manifest is a YAML document, either a single run mapping::

    device: Tesla V100
    precision: FP32
    fft_length: 16384
    requested_mhz: 945
    power_log: run.power.csv
    trace_log: run.trace.csv

or shared defaults plus a list of runs::

    defaults: {device: Tesla V100, precision: FP32, fft_length: 16384}
    runs:
      - {label: f1530, requested_mhz: 1530, power_log: a.csv, trace_log: a.trace.csv}

Relative paths resolve against the manifest's directory. ``power_offset_ms`` and
``trace_offset_ms`` shift the timestamps of one file each, so a power log
and a trace captured against different clocks can be brought together.
"""

import os
from dataclasses import dataclass
from typing import List, Optional

import yaml

from .core import FftConfig, Precision, validate_config
from .errors import ConfigError, InputError, MissingInput
from .ingest import PowerLogFormat
from .reports import atomic_write_text

DEFAULT_MEMORY_BYTES = 2 * 1024 ** 3


@dataclass(frozen=True)
class RunManifest:
    label: str
    device: str
    precision: Precision
    fft_length: int
    requested_mhz: float
    power_log: str
    trace_log: str
    log_format: PowerLogFormat = PowerLogFormat.SMI_CSV
    repeat_group: Optional[str] = None
    memory_bytes: int = DEFAULT_MEMORY_BYTES
    n_runs: int = 1
    n_fft: Optional[int] = None
    power_offset_ms: float = 0.0
    trace_offset_ms: float = 0.0
    kernel_filter: Optional[str] = None

    @property
    def config(self) -> FftConfig:
        return validate_config(FftConfig(
            n=self.fft_length,
            precision=self.precision,
            memory_bytes=self.memory_bytes,
            n_runs=self.n_runs,
        ))

    def check_files(self) -> None:
        """Raise MissingInput unless both log files exist."""
        for path in (self.power_log, self.trace_log):
            if not os.path.exists(path):
                raise MissingInput(f"Run {self.label!r}: file not found: {path}")


_REQUIRED = ("device", "precision", "fft_length", "requested_mhz", "power_log", "trace_log")


def _resolve(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base_dir, path))


def manifest_from_dict(entry: dict, base_dir: str = ".", index: int = 0) -> RunManifest:
    """Build a RunManifest from one mapping, resolving relative paths against ``base_dir``."""
    missing = [key for key in _REQUIRED if entry.get(key) is None]
    if missing:
        raise ConfigError(f"Run #{index + 1}: missing {', '.join(missing)}")
    try:
        requested = float(entry["requested_mhz"])
        return RunManifest(
            label=str(entry.get("label") or f"run{index + 1}@{requested:g}"),
            device=str(entry["device"]),
            precision=Precision.parse(entry["precision"]),
            fft_length=int(entry["fft_length"]),
            requested_mhz=requested,
            power_log=_resolve(base_dir, str(entry["power_log"])),
            trace_log=_resolve(base_dir, str(entry["trace_log"])),
            log_format=PowerLogFormat.parse(entry.get("format", PowerLogFormat.SMI_CSV)),
            repeat_group=None if entry.get("repeat_group") is None else str(entry["repeat_group"]),
            memory_bytes=int(entry.get("memory_bytes", DEFAULT_MEMORY_BYTES)),
            n_runs=int(entry.get("n_runs", 1)),
            n_fft=None if entry.get("n_fft") is None else int(entry["n_fft"]),
            power_offset_ms=float(entry.get("power_offset_ms", 0.0)),
            trace_offset_ms=float(entry.get("trace_offset_ms", 0.0)),
            kernel_filter=entry.get("kernel_filter"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Run #{index + 1}: {e}") from None


def load_manifests(path: str) -> List[RunManifest]:
    """
    Load every run described by a manifest file.

    Args:
        path: YAML manifest

    Returns:
        list: RunManifest objects in file order
    """
    if not os.path.exists(path):
        raise MissingInput(f"Manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise InputError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: manifest must be a mapping")

    base_dir = os.path.dirname(os.path.abspath(path))
    if "runs" not in document:
        return [manifest_from_dict(document, base_dir)]

    defaults = document.get("defaults") or {}
    runs = document.get("runs") or []
    if not runs:
        raise ConfigError(f"{path}: manifest lists no runs")
    return [manifest_from_dict({**defaults, **run}, base_dir, i) for i, run in enumerate(runs)]


def write_manifest(path: str, defaults: dict, runs: List[dict]) -> str:
    document = {"defaults": defaults, "runs": runs}
    return atomic_write_text(path, yaml.safe_dump(document, sort_keys=False))
