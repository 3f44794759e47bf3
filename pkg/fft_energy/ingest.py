"""
Parsers for power-sampler logs and kernel-trace logs.

Formats
-------
SmiCsv (nvidia-smi style query, exported to CSV)::

    timestamp_ms,power_w,core_clock_mhz,mem_clock_mhz
    1000.0,55.2,945,877

The header is mandatory. Clock cells may be left empty.

TegraText (minimal tegrastats subset, one sample per line)::

    <timestamp_ms> ... [GR3D_FREQ <util>%@<MHz>] ... POM_5V_IN <inst_mW>/<avg_mW> ...

Only the leading timestamp, the instantaneous ``POM_5V_IN`` reading and
the optional ``GR3D_FREQ`` clock are read; every other field is ignored.

Kernel trace CSV::

    start_ms,duration_ms,name
    100.0,25.5,fft_stage_1
"""

from __future__ import annotations

import io
import logging
import math
import os
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .core import KernelInterval, PowerSample
from .errors import ConfigError, MissingInput, NoData, OrderError, ParseError

logger = logging.getLogger(__name__)

SMI_COLUMNS = ["timestamp_ms", "power_w", "core_clock_mhz", "mem_clock_mhz"]
TRACE_COLUMNS = ["start_ms", "duration_ms", "name"]

_NUMBER = r"[-+]?\d+(?:\.\d+)?"
TEGRA_LINE = re.compile(rf"^\s*(?P<t>{_NUMBER})\s+(?P<body>.*)$")
TEGRA_POWER = re.compile(rf"\bPOM_5V_IN\s+(?P<inst>{_NUMBER})/(?P<avg>{_NUMBER})")
TEGRA_CLOCK = re.compile(rf"\bGR3D_FREQ\s+\d+%@(?P<clock>{_NUMBER})")

_TOKENIZE_LINE = re.compile(r"line (\d+)")


class PowerLogFormat(Enum):
    SMI_CSV = "smi_csv"
    TEGRA_TEXT = "tegra_text"

    @classmethod
    def parse(cls, text) -> "PowerLogFormat":
        if isinstance(text, PowerLogFormat):
            return text
        key = str(text).strip().lower().replace("-", "_")
        aliases = {"smi": "smi_csv", "smicsv": "smi_csv", "tegra": "tegra_text", "tegrastats": "tegra_text", "tegratext": "tegra_text"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"Unknown power log format: {text!r}") from None


@dataclass(frozen=True)
class TraceLog:
    """Kernel intervals of one run, sorted by start time."""

    intervals: Tuple[KernelInterval, ...]
    source: str = ""
    warnings: Tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.intervals)


def _read_table(text: str, columns: List[str], what: str) -> pd.DataFrame:
    if not text or not text.strip():
        raise ParseError(f"Empty {what}", line=1)
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            skip_blank_lines=False,
        )
    except pd.errors.ParserError as e:
        match = _TOKENIZE_LINE.search(str(e))
        raise ParseError(f"Malformed {what} row: {e}", line=int(match.group(1)) if match else None) from None
    except pd.errors.EmptyDataError:
        raise ParseError(f"Empty {what}", line=1) from None

    header = [str(c).strip() for c in frame.columns]
    if header != columns:
        raise ParseError(f"Expected {what} header {','.join(columns)}, got {','.join(header)}", line=1)
    frame.columns = columns
    return frame


def _is_blank(row: Sequence) -> bool:
    return all(_missing(v) for v in row)


def _missing(value) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return str(value).strip() == ""


def _cell_float(value, column: str, line: int, required: bool = True) -> Optional[float]:
    if _missing(value):
        if required:
            raise ParseError(f"Missing value for {column}", line=line)
        return None
    try:
        number = float(str(value).strip())
    except ValueError:
        raise ParseError(f"Not a number in {column}: {value!r}", line=line) from None
    if not math.isfinite(number):
        raise ParseError(f"Non-finite value in {column}: {value!r}", line=line)
    return number


def _parse_smi_csv(text: str, epoch_offset_ms: float):
    frame = _read_table(text, SMI_COLUMNS, "SmiCsv power log")
    samples, lines = [], []
    for index, row in enumerate(frame.itertuples(index=False, name=None)):
        line = index + 2
        if _is_blank(row):
            continue
        t = _cell_float(row[0], "timestamp_ms", line)
        power = _cell_float(row[1], "power_w", line)
        core = _cell_float(row[2], "core_clock_mhz", line, required=False)
        mem = _cell_float(row[3], "mem_clock_mhz", line, required=False)
        samples.append(_make_sample(t + epoch_offset_ms, power, core, mem, line))
        lines.append(line)
    return samples, lines


def _parse_tegra_text(text: str, epoch_offset_ms: float):
    samples, lines = [], []
    for index, raw in enumerate(text.splitlines()):
        line = index + 1
        if not raw.strip():
            continue
        head = TEGRA_LINE.match(raw)
        if head is None:
            raise ParseError("Line does not start with a millisecond timestamp", line=line)
        power = TEGRA_POWER.search(head.group("body"))
        if power is None:
            raise ParseError("Missing POM_5V_IN <mW>/<mW> field", line=line)
        clock = TEGRA_CLOCK.search(head.group("body"))
        samples.append(_make_sample(
            float(head.group("t")) + epoch_offset_ms,
            float(power.group("inst")) / 1000.0,
            float(clock.group("clock")) if clock else None,
            None,
            line,
        ))
        lines.append(line)
    return samples, lines


def _make_sample(t, power, core, mem, line) -> PowerSample:
    try:
        return PowerSample(t=t, power=power, core_clock=core, mem_clock=mem)
    except ValueError as e:
        raise ParseError(str(e), line=line) from None


def _make_interval(start, end, name, line) -> KernelInterval:
    try:
        return KernelInterval(start=start, end=end, name=name)
    except ValueError as e:
        raise ParseError(f"{e}; duration below the timestamp resolution", line=line) from None


def parse_power_log(text: str, fmt=PowerLogFormat.SMI_CSV, epoch_offset_ms: float = 0.0) -> List[PowerSample]:
    """
    Parse a power-sampler log.

    Args:
        text: Log file contents
        fmt: PowerLogFormat (or its name)
        epoch_offset_ms: Added to every timestamp to align this log with the trace clock

    Returns:
        list: PowerSample objects in file order

    Raises:
        ParseError: On malformed rows, with the offending line number
        OrderError: If timestamps go backwards
    """
    fmt = PowerLogFormat.parse(fmt)
    if fmt is PowerLogFormat.SMI_CSV:
        samples, lines = _parse_smi_csv(text, epoch_offset_ms)
    else:
        if not text or not text.strip():
            raise ParseError("Empty TegraText power log", line=1)
        samples, lines = _parse_tegra_text(text, epoch_offset_ms)

    if not samples:
        raise ParseError("Power log contains no samples")

    times = np.array([s.t for s in samples])
    backwards = np.flatnonzero(np.diff(times) < 0)
    if backwards.size:
        i = int(backwards[0]) + 1
        raise OrderError(f"Timestamp {samples[i].t} precedes previous sample {samples[i - 1].t}", line=lines[i])
    return samples


def parse_kernel_trace(text: str, source: str = "", epoch_offset_ms: float = 0.0) -> TraceLog:
    """
    Parse a kernel trace CSV into a TraceLog sorted by kernel start.

    Overlapping kernels are accepted and reported in ``TraceLog.warnings``.
    """
    frame = _read_table(text, TRACE_COLUMNS, "kernel trace")
    intervals = []
    for index, row in enumerate(frame.itertuples(index=False, name=None)):
        line = index + 2
        if _is_blank(row):
            continue
        start = _cell_float(row[0], "start_ms", line)
        duration = _cell_float(row[1], "duration_ms", line)
        if duration <= 0:
            raise ParseError(f"Kernel duration must be positive, got {duration}", line=line)
        name = "" if _missing(row[2]) else str(row[2]).strip()
        start += epoch_offset_ms
        intervals.append(_make_interval(start, start + duration, name, line))

    if not intervals:
        raise ParseError("Kernel trace contains no kernels")

    intervals.sort(key=lambda k: k.start)
    warnings = []
    for previous, current in zip(intervals, intervals[1:]):
        if current.start < previous.end:
            warnings.append(f"kernels {previous.name!r} and {current.name!r} overlap at {current.start} ms")
    for message in warnings:
        logger.warning(message)
    return TraceLog(intervals=tuple(intervals), source=source, warnings=tuple(warnings))


def _read_text(path: str) -> str:
    if not os.path.exists(path):
        raise MissingInput(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def read_power_log(path: str, fmt=PowerLogFormat.SMI_CSV, epoch_offset_ms: float = 0.0) -> List[PowerSample]:
    """File wrapper around parse_power_log that tags errors with the path."""
    text = _read_text(path)
    try:
        return parse_power_log(text, fmt, epoch_offset_ms=epoch_offset_ms)
    except ParseError as e:
        raise e.with_source(path) from None


def read_kernel_trace(path: str, epoch_offset_ms: float = 0.0) -> TraceLog:
    """File wrapper around parse_kernel_trace that tags errors with the path."""
    text = _read_text(path)
    try:
        return parse_kernel_trace(text, source=path, epoch_offset_ms=epoch_offset_ms)
    except ParseError as e:
        raise e.with_source(path) from None


def _format_float(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def format_smi_csv(samples: Sequence[PowerSample]) -> str:
    """Serialize samples as SmiCsv; parse_power_log reads the values back unchanged."""
    frame = pd.DataFrame(
        [[_format_float(s.t), _format_float(s.power), _format_float(s.core_clock), _format_float(s.mem_clock)] for s in samples],
        columns=SMI_COLUMNS,
    )
    return frame.to_csv(index=False, lineterminator="\n")


def format_kernel_trace(trace) -> str:
    intervals = trace.intervals if isinstance(trace, TraceLog) else trace
    frame = pd.DataFrame(
        [[_format_float(k.start), _format_float(k.end - k.start), k.name] for k in intervals],
        columns=TRACE_COLUMNS,
    )
    return frame.to_csv(index=False, lineterminator="\n")


def select_kernels(trace: TraceLog, pattern: Optional[str]) -> TraceLog:
    """Keep only kernels whose name matches ``pattern`` (regular expression search)."""
    if not pattern:
        return trace
    regex = re.compile(pattern)
    kept = tuple(k for k in trace.intervals if regex.search(k.name))
    if not kept:
        raise NoData(f"No kernel in {trace.source or 'trace'} matches {pattern!r}")
    return TraceLog(intervals=kept, source=trace.source, warnings=trace.warnings)


def run_interval(trace: TraceLog) -> KernelInterval:
    """Span from the first kernel start to the last kernel end of one run."""
    if not trace.intervals:
        raise NoData("Trace has no kernels")
    start = min(k.start for k in trace.intervals)
    end = max(k.end for k in trace.intervals)
    name = trace.intervals[0].name if len(trace.intervals) == 1 else f"run[{len(trace.intervals)} kernels]"
    return KernelInterval(start=start, end=end, name=name)


def validate_run(samples: Sequence[PowerSample], trace: TraceLog, require_clock: bool = False, gap_factor: float = 5.0) -> List[str]:
    """
    Check that a power log and a trace belong together.

    Args:
        samples: Parsed power samples
        trace: Parsed kernel trace
        require_clock: Warn when the power log carries no core clock
        gap_factor: Sampling gaps above this multiple of the median period are reported

    Returns:
        list: Warning messages, empty when the run looks sound
    """
    warnings = []
    if samples:
        first, last = samples[0].t, samples[-1].t
        outside = [k for k in trace.intervals if k.start < first or k.end > last]
        if outside:
            names = ", ".join(repr(k.name) for k in outside[:3])
            warnings.append(f"trace exceeds power log span [{first}, {last}] ms ({len(outside)} kernels, e.g. {names})")

    if len(samples) >= 3:
        deltas = np.diff([s.t for s in samples])
        median = float(np.median(deltas))
        if median > 0:
            for i in np.flatnonzero(deltas > gap_factor * median):
                warnings.append(
                    f"sampling gap of {deltas[i]:g} ms after {samples[i].t} ms exceeds {gap_factor:g}x median period {median:g} ms"
                )

    if require_clock and any(s.core_clock is None for s in samples):
        warnings.append("core clock column missing; frequency verification not possible")

    for message in warnings:
        logger.warning(message)
    return warnings
