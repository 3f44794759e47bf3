import os
import json
import tempfile
from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Optional

from .attribution import FrequencyVerdict
from .errors import InputError, MissingInput
from .metrics import EnergyReport

SCHEMA_VERSION = 1


def atomic_write_text(path: str, text: str) -> str:
    """
    Write a file so readers never see a partial result.

    The text goes to a temporary file in the target directory which is
    then renamed over ``path``.

    Args:
        path: Destination file
        text: Contents to write

    Returns:
        str: The destination path
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


@dataclass
class RunAnalysis:
    """Result of analyzing one manifest run."""

    label: str
    device: str
    precision: str
    fft_length: int
    requested_mhz: float
    report: EnergyReport
    verdict: Optional[FrequencyVerdict] = None
    sampling_period_ms: Optional[float] = None
    sampling_ok: Optional[bool] = None
    kernels: int = 1
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        verdict = None
        if self.verdict is not None:
            verdict = {
                "requested": self.verdict.requested,
                "achieved_mode": self.verdict.achieved_mode,
                "status": self.verdict.status.value,
                "stable_share": self.verdict.stable_share,
            }
        return {
            "label": self.label,
            "device": self.device,
            "precision": self.precision,
            "fft_length": self.fft_length,
            "requested_mhz": self.requested_mhz,
            "kernels": self.kernels,
            "energy": self.report.to_dict(),
            "verdict": verdict,
            "sampling_period_ms": self.sampling_period_ms,
            "sampling_ok": self.sampling_ok,
            "warnings": list(self.warnings),
        }


@dataclass
class AnalysisReport:
    """Schema-versioned collection of run analyses."""

    runs: List[RunAnalysis] = field(default_factory=list)
    created: str = field(default_factory=lambda: datetime.now().isoformat())
    schema_version: int = SCHEMA_VERSION

    @property
    def warnings(self) -> List[str]:
        return [w for run in self.runs for w in run.warnings]

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "created": self.created,
            "runs": [run.to_dict() for run in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"Analysis report (schema {self.schema_version}, {self.created})", ""]
        header = f"{'run':<24} {'MHz':>8} {'energy J':>12} {'time s':>10} {'avg W':>9} {'GFLOPS/W':>10} {'verdict':>9}"
        lines.append(header)
        lines.append("-" * len(header))
        for run in self.runs:
            verdict = run.verdict.status.value if run.verdict else "-"
            lines.append(
                f"{run.label[:24]:<24} {run.requested_mhz:>8g} {run.report.energy_j:>12.4f} "
                f"{run.report.duration_s:>10.4f} {run.report.avg_power_w:>9.2f} "
                f"{run.report.efficiency_flops_per_w / 1e9:>10.3f} {verdict:>9}"
            )
        warnings = self.warnings
        if warnings:
            lines.append("")
            lines.append("Warnings:")
            lines.extend(f"  - {w}" for w in warnings)
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "text") -> str:
        return self.to_json() if fmt == "json" else self.to_text()

    def write(self, path: str, fmt: str = "text") -> str:
        return atomic_write_text(path, self.render(fmt))


def load_json(path: str) -> dict:
    """Read a JSON document written by this package."""
    if not os.path.exists(path):
        raise MissingInput(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise InputError(f"{path}: invalid JSON: {e}") from None
