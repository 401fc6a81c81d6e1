"""Command-line front end.

Verbs::

    zenotrap run <config> [--out-dir D] [--no-figures]
    zenotrap sweep <config> --kappa start:stop:steps[:log] [--jobs N] [--out-dir D] [--no-figures]
    zenotrap presets list
    zenotrap presets run <name> [--out-dir D] [--no-figures]
    zenotrap compare <a.json> <b.json> [--tol T] [--channel-tol NAME=TOL]

Exit codes: 0 pass, 1 tolerance failure, 2 input or integration error.  The
output directory defaults to the current directory, overridable by the
ZENOTRAP_OUT_DIR environment variable and then by --out-dir.
"""
from __future__ import annotations

import argparse
import importlib.resources
import os
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, load
from .errors import ConfigError, StiffnessError, TruncationError, ZenotrapError
from .scenario import (
    FAIL,
    CompareOutcome,
    RunResult,
    _dump_json,
    compare_documents,
    format_reference_numbers,
    load_series_document,
    reference_numbers,
    run_scenario,
    sweep_kappa,
    write_sweep_csv,
)

EXIT_PASS = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2

REFERENCE_PRESET = "reference-numbers"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenotrap",
        description="Measured-ion sideband dynamics: scenario runs, sweeps, and comparisons.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="integrate one scenario file and write artifacts")
    run_p.add_argument("config", help="path to a scenario file")
    _add_output_args(run_p)

    sweep_p = sub.add_parser("sweep", help="closed-form branch/rate table over a kappa grid")
    sweep_p.add_argument("config", help="path to a scenario file")
    sweep_p.add_argument(
        "--kappa", required=True, metavar="START:STOP:STEPS[:log]",
        help="measurement-rate grid, e.g. 2.5e5:4e6:64:log",
    )
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel row workers (default 1)")
    _add_output_args(sweep_p)

    presets_p = sub.add_parser("presets", help="list or run the shipped presets")
    presets_sub = presets_p.add_subparsers(dest="presets_verb", required=True)
    presets_sub.add_parser("list", help="list shipped presets")
    preset_run_p = presets_sub.add_parser("run", help="run a shipped preset by name")
    preset_run_p.add_argument("name", help="preset name (see `zenotrap presets list`)")
    _add_output_args(preset_run_p)

    compare_p = sub.add_parser("compare", help="compare two run documents channel by channel")
    compare_p.add_argument("series_a", help="first run JSON document")
    compare_p.add_argument("series_b", help="second run JSON document")
    compare_p.add_argument("--tol", type=float, default=1e-9, help="default per-channel tolerance")
    compare_p.add_argument(
        "--channel-tol", action="append", default=[], metavar="NAME=TOL",
        help="per-channel override, repeatable",
    )
    return parser


def _add_output_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-dir", default=None, help="artifact directory (default: ZENOTRAP_OUT_DIR or .)")
    parser.add_argument("--no-figures", action="store_true", help="skip figure rendering, emit data only")


def _resolve_out_dir(arg_value: str | None) -> Path:
    if arg_value is not None:
        return Path(arg_value)
    env = os.environ.get("ZENOTRAP_OUT_DIR")
    return Path(env) if env else Path(".")


def parse_kappa_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"--kappa expects start:stop:steps[:log], got {text!r}")
    if len(parts) == 4 and parts[3] != "log":
        raise ConfigError(f"--kappa spacing must be 'log' (or omitted for linear), got {parts[3]!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--kappa: cannot parse {text!r}: {exc}") from exc
    if steps < 2:
        raise ConfigError("--kappa needs at least 2 steps")
    if not (stop > start >= 0):
        raise ConfigError("--kappa needs stop > start >= 0")
    if len(parts) == 4:
        if start <= 0:
            raise ConfigError("--kappa log spacing needs start > 0")
        return np.geomspace(start, stop, steps)
    return np.linspace(start, stop, steps)


def _print_report(result: RunResult) -> None:
    config = result.config
    print(f"scenario {config.name}: dim_fock={result.series.metadata['dim_fock']}, "
          f"{len(result.series.times)} samples to t={result.series.times[-1]:.6g} s "
          f"[{result.series.provenance}]")
    report = result.report
    if not report.channels and report.envelope is None and report.energy_drift is None:
        print("  comparison: out of closed-form scope (nothing checked)")
    for row in report.channels:
        tol = "-" if row.tolerance is None else f"{row.tolerance:.3g}"
        print(f"  {row.channel:16s} max|dev| = {row.max_abs_dev:.3e} at t = {row.t_at_max:.4e} s"
              f"  tol = {tol:8s} {row.verdict}")
    if report.envelope is not None:
        fit = report.envelope
        print(f"  envelope rate ({fit.channel}, {fit.method}): {fit.rate:.6e} 1/s"
              f" vs kappa/4 = {fit.expected_rate:.6e}, rel err = {fit.rel_error:.2e},"
              f" ci = ±{fit.ci_halfwidth:.2e}  {fit.verdict}")
    if report.energy_drift is not None:
        drift = report.energy_drift
        print(f"  energy drift: max = {drift.max_abs_drift:.3e} hbar*omega"
              f"  tol = {drift.tolerance:.3g}  {drift.verdict}")
    diag = result.diagnostics
    print(f"  final state: trace err {diag.trace_error:.1e}, herm {diag.herm_defect:.1e},"
          f" min eig {diag.min_eigenvalue:.1e}, tail {diag.tail_mass:.1e}"
          f" -> {'ok' if diag.passed else 'SUSPECT'}")
    for path in result.files:
        print(f"  wrote {path}")


def _render_run_figures(result: RunResult, out_dir: Path) -> None:
    from . import figures

    name = result.config.name
    result.files.append(figures.overview_figure(result, out_dir / f"{name}_overview.png"))
    if result.analytic_series is not None:
        result.files.append(figures.comparison_figure(result, out_dir / f"{name}_comparison.png"))


def _cmd_run(args) -> int:
    config = load(args.config)
    return _execute_run(config, args)


def _execute_run(config: ScenarioConfig, args) -> int:
    out_dir = _resolve_out_dir(args.out_dir)
    result = run_scenario(config, out_dir)
    if not args.no_figures:
        _render_run_figures(result, out_dir)
    _print_report(result)
    return EXIT_PASS if result.passed else EXIT_TOLERANCE


def _cmd_sweep(args) -> int:
    config = load(args.config)
    grid = parse_kappa_grid(args.kappa)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    rows = sweep_kappa(config, grid, jobs=args.jobs)
    out_dir = _resolve_out_dir(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{config.name}_sweep.csv"
    write_sweep_csv(csv_path, rows)
    print(f"sweep {config.name}: {len(rows)} rows -> {csv_path}")
    flips = [i for i in range(1, len(rows)) if rows[i].branch != rows[i - 1].branch]
    for i in flips:
        print(f"  branch {rows[i-1].branch} -> {rows[i].branch} between "
              f"kappa/kappa_crit = {rows[i-1].kappa_over_crit:.4f} and {rows[i].kappa_over_crit:.4f}")
    noted = sum(1 for row in rows if row.error)
    if noted:
        print(f"  {noted} rows carry notes (no fittable envelope); see the error column")
    if not args.no_figures:
        from . import figures

        fig_path = figures.sweep_figure(rows, out_dir / f"{config.name}_sweep.png")
        print(f"  wrote {fig_path}")
    return EXIT_PASS


def _preset_files() -> dict[str, Path]:
    root = importlib.resources.files("zenotrap") / "presets"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".cfg"):
            out[entry.name[: -len(".cfg")]] = Path(str(entry))
    return out


def _preset_description(path: Path) -> str:
    for line in path.read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            return stripped.lstrip("# ").strip()
        if stripped:
            break
    return ""


def _cmd_presets(args) -> int:
    files = _preset_files()
    if args.presets_verb == "list":
        for name, path in files.items():
            print(f"{name:20s} {_preset_description(path)}")
        print(f"{REFERENCE_PRESET:20s} recompute the published worked example and flag agreements")
        return EXIT_PASS
    name = args.name
    if name == REFERENCE_PRESET:
        report = reference_numbers()
        print(format_reference_numbers(report))
        out_dir = _resolve_out_dir(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{REFERENCE_PRESET}_report.json"
        _dump_json(path, report)
        print(f"  wrote {path}")
        agreement = report["agreement"]
        ok = agreement["ratio_roundtrip_ok"] and agreement["omega01_matches_stated_3sf"]
        return EXIT_PASS if ok else EXIT_TOLERANCE
    if name not in files:
        known = ", ".join([*files, REFERENCE_PRESET])
        raise ConfigError(f"unknown preset {name!r}; shipped presets: {known}")
    config = load(files[name])
    return _execute_run(config, args)


def _cmd_compare(args) -> int:
    channel_tols = {}
    for spec_text in args.channel_tol:
        name, sep, value = spec_text.partition("=")
        if not sep:
            raise ConfigError(f"--channel-tol expects NAME=TOL, got {spec_text!r}")
        try:
            channel_tols[name.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--channel-tol {spec_text!r}: bad tolerance") from exc
    doc_a = load_series_document(args.series_a)
    doc_b = load_series_document(args.series_b)
    outcome: CompareOutcome = compare_documents(doc_a, doc_b, args.tol, channel_tols)
    width = max(len(c.channel) for c in outcome.channels)
    for row in outcome.channels:
        print(f"  {row.channel:{width}s} max|dev| = {row.max_abs_dev:.3e} at t = {row.t_at_max:.4e} s"
              f"  tol = {row.tolerance:.3g}  {row.verdict}")
    failed = [c.channel for c in outcome.channels if c.verdict == FAIL]
    if failed:
        print(f"FAIL: {len(failed)} channel(s) out of tolerance: {', '.join(failed)}")
        return EXIT_TOLERANCE
    print(f"PASS: {len(outcome.channels)} shared channel(s) within tolerance")
    return EXIT_PASS


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; keep its choice
        return int(exc.code or 0)
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        if args.verb == "presets":
            return _cmd_presets(args)
        if args.verb == "compare":
            return _cmd_compare(args)
        parser.error(f"unknown verb {args.verb!r}")
    except ConfigError as exc:
        suffix = f" (line {exc.line_no})" if getattr(exc, "line_no", None) else ""
        print(f"error: {exc}{suffix}", file=sys.stderr)
        return EXIT_INPUT
    except (TruncationError, StiffnessError) as exc:
        print(f"integration error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ZenotrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
