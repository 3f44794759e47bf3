"""
Command-line interface.

    fft-energy [--catalog PATH] [--format text|json] [--seed N]
               [--reference boost|base] [-v] <command> ...

Commands: analyze, sweep, tradeoff, meanopt, plan, simulate, validate.
Exit codes: 0 success, 2 input/parse error, 3 analysis error, 4 config error.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np
import pandas as pd

from .analysis import analyze_run, analyze_sweep
from .catalog import CATALOG_ENV_VAR, load_catalog
from .core import FftConfig, Precision, allowed_frequencies, on_grid, reference_frequency, validate_config
from .errors import ConfigError, FftEnergyError, InputError, MissingInput, NoData
from .ingest import read_kernel_trace, read_power_log, select_kernels, validate_run
from .manifest import load_manifests, write_manifest
from .reports import AnalysisReport, atomic_write_text, load_json
from .rtplan import apply_mean_optimal, build_clock_plan, emit_shell, expected_pipeline_gain, load_pipeline, plan_to_dict, write_plan
from .sweep import (
    bluestein_exclusion,
    mean_optimal_frequency,
    mean_optimal_gain,
    optimal_frequencies,
    optimum_summary,
    sweep_from_dict,
    sweep_to_dict,
    tradeoff_frame,
    tradeoff_matrix,
    write_tradeoff_csv,
)
from .synthdev import PowerModel, SamplerModel, TimeModel, analytic_optimum, simulate_run, write_run

logger = logging.getLogger(__name__)


def _emit(args, text_lines: List[str], document) -> None:
    if args.format == "json":
        print(json.dumps(document, indent=2))
    else:
        for line in text_lines:
            print(line)


def cmd_analyze(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    runs = load_manifests(args.manifest)
    # Every run is analyzed before anything is written.
    report = AnalysisReport(runs=[
        analyze_run(run, catalog, tolerance=args.tolerance, kernel_filter=args.kernel_filter) for run in runs
    ])
    if args.out:
        report.write(args.out, args.format)
        print(f"Report written to {args.out}")
    else:
        print(report.render(args.format), end="")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    runs = load_manifests(args.manifest)
    sweep = analyze_sweep(runs, catalog, tolerance=args.tolerance, kernel_filter=args.kernel_filter)
    document = sweep_to_dict(sweep)
    if args.out:
        atomic_write_text(args.out, json.dumps(document, indent=2) + "\n")

    lines = [f"Sweep {sweep.device} {sweep.config.precision.value} N={sweep.config.n}: {len(sweep.points)} frequencies"]
    for point in sweep.points:
        status = point.verdict.status.value if point.verdict else "-"
        lines.append(f"  {point.frequency:>8g} MHz  {point.energy_j:>12.4f} J  {point.exec_time_s:>10.4f} s  {status}")
    if sweep.behavior is not None:
        lines.append(f"behavior={sweep.behavior.value}")
    try:
        summary = optimum_summary(sweep, args.reference)
        lines.append(
            f"efficiency {summary.efficiency_gain_pct:+.1f}%  time {summary.time_increase_pct:+.1f}%  "
            f"vs {args.reference} {summary.reference_mhz:g} MHz"
        )
        document["summary"] = summary.to_dict()
    except FftEnergyError as e:
        logger.warning("No optimum summary: %s", e)

    lines.append(f"optimal_mhz={sweep.optimal:g}")
    _emit(args, lines, document)
    return 0


def _load_sweeps(paths: List[str]):
    return [sweep_from_dict(load_json(path)) for path in paths]


def cmd_tradeoff(args: argparse.Namespace) -> int:
    sweeps = _load_sweeps(args.sweeps)
    cells = tradeoff_matrix(sweeps, args.reference)
    if args.out:
        write_tradeoff_csv(cells, args.out)
        print(f"{len(cells)} rows written to {args.out}")
    elif args.format == "json":
        print(json.dumps([cell.__dict__ for cell in cells], indent=2))
    else:
        print(tradeoff_frame(cells).to_string(index=False))
    return 0


def _read_optima_csv(path: str):
    if not os.path.exists(path):
        raise MissingInput(f"File not found: {path}")
    try:
        frame = pd.read_csv(path)
        return [(int(n), float(f)) for n, f in zip(frame["fft_length"], frame["optimal_mhz"])]
    except (KeyError, ValueError, pd.errors.ParserError) as e:
        raise InputError(f"{path}: expected columns fft_length,optimal_mhz ({e})") from None


def cmd_meanopt(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    sweeps = [sweep_from_dict(load_json(p)) for p in args.inputs if p.endswith(".json")]
    optima = optimal_frequencies(sweeps)
    for path in args.inputs:
        if not path.endswith(".json"):
            optima.extend(_read_optima_csv(path))
    if not optima:
        raise NoData("No optimal frequencies given")

    device_name = args.device or (sweeps[0].device if sweeps else None)
    if not device_name:
        raise ConfigError("meanopt needs --device when reading optima CSV files")
    device = catalog.get(device_name)
    exclude = None if args.keep_bluestein else bluestein_exclusion(device)
    f_mean = mean_optimal_frequency(optima, allowed_frequencies(device), exclude=exclude)

    document = {"device": device.name, "mean_optimal_mhz": f_mean, "lengths": len(optima)}
    lines = []
    if sweeps:
        gains = mean_optimal_gain(sweeps, f_mean, args.reference)
        document["gains"] = [{"fft_length": n, "frequency_mhz": f, "eff_gain_pct": g} for n, f, g in gains]
        lines = [f"  N={n:<8} at {f:g} MHz: {g:+.1f}%" for n, f, g in gains]
    if args.format == "json":
        print(json.dumps(document, indent=2))
    else:
        print(f"{f_mean:g}")
        for line in lines:
            print(line)
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    device = catalog.get(args.device)
    stages = load_pipeline(args.pipeline)

    if args.stage:
        frequency = args.mhz
        if frequency is None:
            frequency = catalog.mean_optimal(device.name, args.precision)
            if frequency is None:
                raise ConfigError(f"{device.name} has no catalogued mean optimal frequency for {args.precision}")
        stages = apply_mean_optimal(stages, args.stage, frequency)

    plan = build_clock_plan(stages, device)
    gain = expected_pipeline_gain(stages)
    if args.out:
        write_plan(plan, args.out, device=device.name)
    if args.shell:
        atomic_write_text(args.shell, emit_shell(plan, gpu_index=args.gpu))
        os.chmod(args.shell, 0o755)

    document = plan_to_dict(plan, device.name)
    document["expected_gain"] = gain
    lines = [f"{c.action.value:<6} {c.stage}" + (f" {c.min_mhz:g}-{c.max_mhz:g} MHz" if c.min_mhz is not None else "")
             for c in plan.commands]
    lines.append(f"expected efficiency increase: {100 * gain:.1f}%")
    _emit(args, lines, document)
    return 0


def _pick_frequencies(device, count: int) -> List[float]:
    grid = allowed_frequencies(device)
    boost = reference_frequency(device, "boost", grid)
    below = [f for f in grid if f <= boost]
    if count <= 1 or len(below) <= count:
        return below[:max(count, 1)]
    indices = np.unique(np.round(np.linspace(0, len(below) - 1, count)).astype(int))
    return [below[i] for i in indices]


def cmd_simulate(args: argparse.Namespace) -> int:
    catalog = load_catalog(args.catalog)
    device = catalog.get(args.device)
    config = validate_config(FftConfig(n=args.fft_length, precision=Precision.parse(args.precision)))

    power = PowerModel(p_static=args.p_static, k_lin=args.k_lin, k_dyn=args.k_dyn)
    time = TimeModel(t_mem=args.t_mem, f_crit=args.f_crit, idle_state_f=args.idle_state_f, inflation=args.inflation)
    sampler = SamplerModel(requested_period=args.period, jitter=args.jitter, seed=args.seed, latency=args.latency)

    grid = allowed_frequencies(device)
    if args.frequencies:
        frequencies = [float(f) for f in args.frequencies.split(",")]
        off = [f for f in frequencies if not on_grid(f, grid)]
        if off:
            raise ConfigError(f"Not allowed on {device.name}: {', '.join(f'{f:g}' for f in off)} MHz")
    else:
        frequencies = _pick_frequencies(device, args.points)

    seeds = np.random.SeedSequence(args.seed).spawn(len(frequencies))
    entries = []
    for f, seed in zip(frequencies, seeds):
        samples, trace = simulate_run(power, time, sampler, f, seed=seed, clock_cap=args.cap, align=args.align)
        entries.append(write_run(args.out, f"f{f:g}", samples, trace, f))

    manifest = os.path.join(args.out, "sweep.yaml")
    write_manifest(manifest, {
        "device": device.name,
        "precision": config.precision.value,
        "fft_length": config.n,
        "format": "smi_csv",
    }, entries)
    print(f"{len(entries)} runs written to {args.out}")
    print(f"manifest={manifest}")
    print(f"analytic_optimum_mhz={analytic_optimum(power, time, frequencies):g}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    runs = load_manifests(args.manifest)
    total = 0
    document = []
    for run in runs:
        run.check_files()
        samples = read_power_log(run.power_log, run.log_format, epoch_offset_ms=run.power_offset_ms)
        trace = select_kernels(read_kernel_trace(run.trace_log, epoch_offset_ms=run.trace_offset_ms), run.kernel_filter)
        warnings = list(trace.warnings) + validate_run(samples, trace, require_clock=args.require_clock)
        total += len(warnings)
        document.append({"label": run.label, "samples": len(samples), "kernels": len(trace), "warnings": warnings})
        if args.format != "json":
            print(f"{run.label}: {len(samples)} samples, {len(trace)} kernels, {len(warnings)} warnings")
            for warning in warnings:
                print(f"  - {warning}")
    if args.format == "json":
        print(json.dumps({"runs": document, "warnings": total}, indent=2))
    return 0


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("manifest", help="Run manifest (YAML)")
    parser.add_argument("--out", help="Output file")
    parser.add_argument("--kernel-filter", help="Regular expression selecting the FFT kernels")
    parser.add_argument("--tolerance", type=float, help="Allowed clock deviation in MHz (default: one grid step)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fft-energy",
        description="Energy efficiency of GPU FFT workloads under core clock scaling",
    )
    parser.add_argument("--catalog", help=f"Device catalog YAML (default: ${CATALOG_ENV_VAR} or the bundled catalog)")
    parser.add_argument("--format", choices=["text", "json"], default="text", help="Output format")
    parser.add_argument("--seed", type=int, default=0, help="Seed for synthetic data")
    parser.add_argument("--reference", choices=["boost", "base"], default="boost", help="Reference clock for gains")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="Energy and clock verdict of each run in a manifest")
    _add_run_options(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="Optimal frequency of a frequency sweep")
    _add_run_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tradeoff", help="Efficiency/time trade-off table from sweep files")
    p.add_argument("sweeps", nargs="+", help="Sweep JSON files written by 'sweep --out'")
    p.add_argument("--out", help="CSV output file")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("meanopt", help="Mean optimal frequency across FFT lengths")
    p.add_argument("inputs", nargs="+", help="Sweep JSON files or CSV files with fft_length,optimal_mhz")
    p.add_argument("--device", help="Catalog device (default: taken from the sweeps)")
    p.add_argument("--keep-bluestein", action="store_true", help="Keep Bluestein lengths on high-error devices")
    p.set_defaults(func=cmd_meanopt)

    p = sub.add_parser("plan", help="Clock-locking plan for a pipeline")
    p.add_argument("pipeline", help="Pipeline description (YAML)")
    p.add_argument("--device", required=True, help="Catalog device")
    p.add_argument("--out", help="Plan YAML output file")
    p.add_argument("--shell", help="Also write an nvidia-smi shell script")
    p.add_argument("--gpu", type=int, default=0, help="GPU index for the shell script")
    p.add_argument("--stage", help="Lock this stage")
    p.add_argument("--mhz", type=float, help="Frequency for --stage (default: catalogued mean optimum)")
    p.add_argument("--precision", default="FP32", help="Precision for the catalogued mean optimum")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="Write a synthetic frequency sweep")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--device", required=True, help="Catalog device")
    p.add_argument("--frequencies", help="Comma-separated grid frequencies in MHz")
    p.add_argument("--points", type=int, default=5, help="Grid frequencies to pick when --frequencies is absent")
    p.add_argument("--precision", default="FP32")
    p.add_argument("--fft-length", type=int, default=16384)
    p.add_argument("--p-static", type=float, default=40.0, help="Static power in W")
    p.add_argument("--k-lin", type=float, default=0.02, help="Linear power coefficient in W/MHz")
    p.add_argument("--k-dyn", type=float, default=2e-8, help="Cubic power coefficient in W/MHz^3")
    p.add_argument("--t-mem", type=float, default=1.0, help="Memory-bound execution time in s")
    p.add_argument("--f-crit", type=float, default=1000.0, help="Compute-bound threshold in MHz")
    p.add_argument("--idle-state-f", type=float, default=0.0)
    p.add_argument("--inflation", type=float, default=1.0)
    p.add_argument("--period", type=float, default=10.0, help="Requested sampling period in ms")
    p.add_argument("--jitter", type=float, default=0.0, help="Uniform sampling jitter half-width in ms")
    p.add_argument("--latency", type=float, default=0.0, help="Per-sample driver latency in ms")
    p.add_argument("--cap", type=float, help="Clock cap in MHz")
    p.add_argument("--align", action="store_true", help="Sample exactly on kernel boundaries")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="Parse and sanity-check the logs of a manifest")
    p.add_argument("manifest", help="Run manifest (YAML)")
    p.add_argument("--require-clock", action="store_true", help="Warn when the power log has no core clock")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FftEnergyError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
