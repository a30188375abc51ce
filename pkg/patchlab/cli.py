#!/usr/bin/env python3
"""
patchlab command line

Five subcommands share one config file format (see docs/CONFIG.md):

    simulate   run the solver, write trajectory/observables CSVs and a manifest
    envelope   evaluate the lower/upper envelope curves from the motion alone
    classify   persistence/extinction verdict; exit code 0/1/2
    steady     positive steady states over a list of interval lengths
    sweep      classify (and optionally simulate) over a grid of one parameter

Any failure exits with code 3.
"""

from __future__ import annotations

import argparse
import sys
import time
import traceback
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from . import report
from .classifier import Verdict, classify_drifting, classify_linear, classify_nonlinear
from .config import (
    EXIT_ERROR,
    SCHEMA,
    ScenarioConfig,
    build_grid,
    build_initial,
    build_motion,
    build_quadrature,
    build_reaction,
    build_scenario,
    critical_length,
    ensure_directories,
    get_output_dir,
)
from .diagnostics import observe
from .envelope import (
    envelope_series,
    initial_constants,
    persistence_floor,
    sandwich_violation,
    theorem_bounds,
)
from .errors import ConfigError, IncompleteRunError, PatchlabError
from .motion import accumulate_integrals
from .reaction import validate_kpp
from .solver import Field, run
from .steady import energy_residual, epsilon_lengths, scan_frame, solve_many

SWEEP_COLUMNS = ["value", "outcome", "exit_code", "rule", "floor"]
SIMULATED_COLUMNS = ["peak_sup_norm", "final_sup_norm", "sup_ratio", "floor_estimate", "run_error"]


# =============== SIMULATE ===============

def cmd_simulate(cfg: ScenarioConfig, out: Path) -> List[Path]:
    """Solve the scenario; trajectory.csv, observables.csv, manifest.json

    Raises:
        IncompleteRunError: the solver stopped early (outputs are still written)
    """
    started = time.perf_counter()
    report.step(1, "Building scenario")
    s = build_scenario(cfg)
    report.status("📐", f"motion {s.motion.family}, L0 = {s.L0:.6g}, reaction {s.reaction.kind}, D = {s.D:g}")
    report.status("📁", f"output directory: {out}")

    report.step(2, "Solving")
    traj = run(s, verbose=True)
    series = observe(traj)

    results: Dict[str, Any] = {
        "N": s.grid.N,
        "dt": traj.dt,
        "n_steps": traj.n_steps,
        "snapshots": len(traj.fields),
        "clipped_negatives": traj.clipped,
        "final_time": float(traj.final.t),
        "final_sup_norm": traj.final.sup_norm(),
        "final_fourier1": float(series.fourier1[-1]),
        "final_floor_estimate": float(series.floor_estimate[-1]),
    }
    if traj.clipped:
        report.status("⚠️", f"{traj.clipped} negative values clipped to zero")

    a, b = initial_constants(s.initial_field(), s.motion, s.D)
    if not s.nonlinear and traj.ledger is not None and a > 0:
        report.step(3, "Checking envelopes")
        floor = persistence_floor(s.motion, traj.ledger.crit, b, traj.ledger, s.quad)
        violation = sandwich_violation(traj, envelope_series(traj))
        results.update(
            envelope_a=a,
            envelope_b=b,
            envelope_floor=floor.B,
            envelope_floor_stable=floor.stable,
            sandwich_max_relative=float(violation["relative"].max()),
        )
        icon = "✅" if floor.stable else "⚠️"
        report.status(icon, f"envelope floor B = {floor.B:.6g} (stable: {floor.stable})")
        report.status("📊", f"largest sandwich violation / sup|u| = {results['sandwich_max_relative']:.3e}")

    report.step(4, "Saving Results")
    ensure_directories(out)
    files = [
        report.write_csv(traj.to_frame(), out / "trajectory.csv"),
        report.write_csv(series.to_frame(), out / "observables.csv"),
    ]
    files.append(report.write_manifest(out / "manifest.json", "simulate", cfg,
                                       time.perf_counter() - started, results, files, traj.error))
    if traj.error:
        raise IncompleteRunError(f"Run stopped at t={traj.final.t:.6g}: {traj.error}", files)
    return files


# =============== ENVELOPE ===============

def _envelope_times(cfg: ScenarioConfig) -> np.ndarray:
    times = cfg.get("envelope", "times")
    if times:
        return np.array(sorted(set(times)), dtype=float)
    return np.linspace(0.0, cfg.get("grid", "T"), cfg.get("grid", "outputs") + 1)


def cmd_envelope(cfg: ScenarioConfig, out: Path) -> List[Path]:
    """Envelope curves at the configured times; envelope_bounds.csv and envelope_exponents.csv

    Sandwich constants come from [envelope] a/b when set, otherwise from the
    initial profile. A positive origin restarts the envelopes from the
    simulated field at that time.
    """
    started = time.perf_counter()
    report.step(1, "Building motion ledger")
    s = build_scenario(cfg)
    crit = s.critical_length()
    origin = cfg.get("envelope", "origin")
    times = _envelope_times(cfg)
    if origin < 0 or np.any(times < origin):
        raise ConfigError(f"envelope times must not precede origin {origin}", "envelope", "times")

    if cfg.is_set("envelope", "a") and cfg.is_set("envelope", "b"):
        a, b = cfg.get("envelope", "a"), cfg.get("envelope", "b")
    elif origin > 0:
        report.status("⚙️", f"simulating up to the restart time t0 = {origin:g}")
        lead = run(replace(s, T=origin))
        if lead.error:
            raise IncompleteRunError(f"Lead-in run failed: {lead.error}")
        start = lead.final
        a, b = initial_constants(start, s.motion, s.D)
        times = np.where(np.isclose(times, origin, rtol=1e-12, atol=1e-12), start.t, times)
        origin = start.t
    else:
        a, b = initial_constants(s.initial_field(), s.motion, s.D)
    report.status("📏", f"sandwich constants a = {a:.6g}, b = {b:.6g} at t0 = {origin:g}")

    ledger = None
    if times[-1] > 0:
        grid = np.unique(np.concatenate(([0.0, origin], times)))
        ledger = accumulate_integrals(s.motion, crit, float(grid[-1]), s.quad, times=grid)

    report.step(2, "Evaluating envelopes")
    bounds = [theorem_bounds(s.motion, crit, a, b, t, s.xi, ledger, origin, s.quad) for t in times]
    exponents = pd.DataFrame({
        "t": [e.t for e in bounds],
        "lower_exponent": [e.lower_exponent for e in bounds],
        "upper_exponent": [e.upper_exponent for e in bounds],
    })

    report.step(3, "Saving Results")
    ensure_directories(out)
    files = [
        report.write_csv(pd.concat([e.to_frame() for e in bounds], ignore_index=True), out / "envelope_bounds.csv"),
        report.write_csv(exponents, out / "envelope_exponents.csv"),
    ]
    results = {"a": a, "b": b, "origin": origin, "L_crit": crit.value, "times": len(bounds)}
    if ledger is not None:
        results["log_stretch_error"] = ledger.log_stretch_error
    files.append(report.write_manifest(out / "manifest.json", "envelope", cfg,
                                       time.perf_counter() - started, results, files))
    return files


# =============== CLASSIFY ===============

def verdict_for(cfg: ScenarioConfig) -> Verdict:
    """Linear, drifting or nonlinear classification, picked from the config"""
    m = build_motion(cfg)
    r = build_reaction(cfg)
    crit = critical_length(cfg)
    quad = build_quadrature(cfg)
    if r.is_linear:
        if m.drift_speed() != 0.0:
            return classify_drifting(m, crit, quad)
        return classify_linear(m, crit, quad)
    L0 = m.initial_length
    u0 = build_initial(cfg, L0).values(build_grid(cfg).nodes(L0), L0).astype(float)
    u0[0] = u0[-1] = 0.0
    _, b = initial_constants(Field(0.0, u0, L0), m, cfg.get("physics", "D"))
    return classify_nonlinear(m, crit, r, quad, b_initial=b)


def cmd_classify(cfg: ScenarioConfig, out: Path) -> Tuple[Verdict, List[Path]]:
    """Verdict plus classification.txt and manifest.json"""
    started = time.perf_counter()
    report.step(1, "Classifying")
    r = build_reaction(cfg)
    if not r.is_linear:
        kpp = validate_kpp(r)
        for failure in kpp.failures():
            report.status("⚠️", f"KPP condition {failure.name} fails: {failure.detail}")
    verdict = verdict_for(cfg)
    lines = verdict.report_lines()
    for line in lines:
        print(f"   {line}")

    report.step(2, "Saving Results")
    ensure_directories(out)
    body = report.classification_report(f"CLASSIFICATION: {verdict.outcome.value}", lines)
    files = [report.write_text(body, out / "classification.txt")]
    results = {
        "outcome": verdict.outcome.value,
        "rule": verdict.rule,
        "floor": verdict.floor,
        "constants": verdict.constants,
        "advisories": list(verdict.advisories),
    }
    files.append(report.write_manifest(out / "manifest.json", "classify", cfg,
                                       time.perf_counter() - started, results, files))
    return verdict, files


# =============== STEADY ===============

def cmd_steady(cfg: ScenarioConfig, out: Path, jobs: int = 1) -> List[Path]:
    """Steady states at [steady] lengths and at L_crit (1 + eps) for [steady] epsilons"""
    started = time.perf_counter()
    r = build_reaction(cfg)
    if r.is_linear:
        raise ConfigError("steady states need a KPP reaction", "reaction", "kind")
    D = cfg.get("physics", "D")
    lengths = list(cfg.get("steady", "lengths")) + list(epsilon_lengths(r, D, cfg.get("steady", "epsilons")))
    if not lengths:
        raise ConfigError("no lengths to scan; set lengths or epsilons", "steady")

    report.step(1, "Shooting")
    states = solve_many(r, D, lengths, cfg.get("steady", "n_half"), n_jobs=jobs, verbose=True)
    summary = scan_frame(states)
    energy = [energy_residual(st, r, D) for st in states]
    for st, e in zip(states, energy):
        report.status("📊", f"L = {st.L:.6g}: sup U = {st.sup_norm:.6g}, energy gap {e.relative_gap:.2e}")

    report.step(2, "Saving Results")
    ensure_directories(out)
    profiles = pd.concat(
        [st.to_frame().assign(L=st.L)[["L", "x", "U"]] for st in states], ignore_index=True
    )
    files = [
        report.write_csv(summary[["L", "sup_norm", "shoot_slope"]], out / "steady_scan.csv"),
        report.write_csv(profiles, out / "steady_profiles.csv"),
    ]
    results = {
        "lengths": len(states),
        "trivial": int(summary["trivial"].sum()),
        "max_energy_gap": max(e.relative_gap for e in energy),
    }
    files.append(report.write_manifest(out / "manifest.json", "steady", cfg,
                                       time.perf_counter() - started, results, files))
    return files


# =============== SWEEP ===============

def _sweep_point(cfg: ScenarioConfig, parameter: str, value: float, index: int,
                 out: Path, simulate: bool) -> Dict[str, Any]:
    row: Dict[str, Any] = {"value": value}
    try:
        point = cfg.with_value(parameter, value)
        verdict = verdict_for(point)
    except PatchlabError as exc:
        return {**row, "outcome": "Error", "exit_code": EXIT_ERROR, "rule": str(exc), "floor": np.nan}
    row.update(outcome=verdict.outcome.value, exit_code=verdict.outcome.exit_code,
               rule=verdict.rule, floor=np.nan if verdict.floor is None else verdict.floor)
    if simulate:
        traj = run(build_scenario(point))
        series = observe(traj)
        report.write_csv(series.to_frame(), out / "points" / f"point_{index:03d}.csv")
        peak = float(series.sup_norm.max())
        final = float(series.sup_norm[-1])
        row.update(
            peak_sup_norm=peak,
            final_sup_norm=final,
            sup_ratio=final / peak if peak > 0 else 0.0,
            floor_estimate=float(series.floor_estimate[-1]),
            run_error=traj.error or "",
        )
    return row


def _check_sweep_parameter(parameter: str) -> None:
    section, _, key = parameter.partition(".")
    entry = SCHEMA.get(section, {}).get(key)
    if entry is None or entry.type not in ("float", "int", "auto"):
        raise ConfigError(f"cannot sweep {parameter!r}; use section.key of a numeric key", "sweep", "parameter")


def cmd_sweep(cfg: ScenarioConfig, out: Path, jobs: int = 1) -> List[Path]:
    """Verdict (and run summary when [sweep] simulate is set) per value of one parameter

    Points run in parallel and share nothing; the summary keeps input order.
    """
    started = time.perf_counter()
    parameter = cfg.get("sweep", "parameter")
    values = [float(v) for v in cfg.get("sweep", "values")]
    simulate = cfg.get("sweep", "simulate")
    _check_sweep_parameter(parameter)

    report.step(1, f"Sweeping {parameter} over {len(values)} value(s)")
    rows = Parallel(n_jobs=jobs)(
        delayed(_sweep_point)(cfg, parameter, v, i, out, simulate) for i, v in enumerate(values)
    )
    columns = SWEEP_COLUMNS + (SIMULATED_COLUMNS if simulate else [])
    summary = pd.DataFrame(rows, columns=columns)
    for row in rows:
        report.status("📌", f"{parameter} = {row['value']:g}: {row['outcome']} ({row['rule']})")

    report.step(2, "Saving Results")
    ensure_directories(out)
    files = [report.write_csv(summary, out / "sweep_summary.csv")]
    results = {"parameter": parameter, "points": len(rows),
               "outcomes": [row["outcome"] for row in rows]}
    files.append(report.write_manifest(out / "manifest.json", "sweep", cfg,
                                       time.perf_counter() - started, results, files))
    return files


# =============== MAIN ===============

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Scenario config file (INI)")
    common.add_argument("--out", help="Output directory (default: output/)")
    common.add_argument("--jobs", type=int, default=1, help="Parallel workers for steady and sweep (default: 1)")
    common.add_argument("--seed", type=int, help="Accepted and ignored; nothing here is random")
    common.add_argument("--debug", action="store_true", help="Print the traceback on errors")

    parser = argparse.ArgumentParser(
        prog="patchlab",
        description="Reaction-diffusion on a moving interval: simulation, envelopes, classification",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Simulate a scenario and write CSVs to output/
  python -m patchlab simulate --config configs/simulate.ini

  # Persistence/extinction verdict (exit code 0, 1 or 2)
  python -m patchlab classify --config configs/classify.ini --out output/classify

  # Power-law approach dichotomy over k on four workers
  python -m patchlab sweep --config configs/sweep.ini --jobs 4
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "Run the solver and write trajectory and observables"),
        ("envelope", "Evaluate the lower/upper envelope curves"),
        ("classify", "Classify persistence vs extinction"),
        ("steady", "Steady states over a list of lengths"),
        ("sweep", "Classify over a parameter grid"),
    ):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out = get_output_dir(args.out)
    if args.jobs < 1:
        print(f"\n❌ Error: --jobs must be at least 1, got {args.jobs}")
        return EXIT_ERROR

    try:
        cfg = ScenarioConfig.load(args.config)
        report.banner(f"patchlab {args.command}: {args.config}")
        if args.command == "simulate":
            cmd_simulate(cfg, out)
        elif args.command == "envelope":
            cmd_envelope(cfg, out)
        elif args.command == "classify":
            verdict, _ = cmd_classify(cfg, out)
            report.banner(f"VERDICT: {verdict.outcome.value}")
            return verdict.outcome.exit_code
        elif args.command == "steady":
            cmd_steady(cfg, out, args.jobs)
        else:
            cmd_sweep(cfg, out, args.jobs)
    except (PatchlabError, ValueError, OSError) as e:
        print(f"\n❌ Error: {e}")
        if args.debug:
            traceback.print_exc()
        return EXIT_ERROR

    report.banner("✓ SUCCESS! All files saved.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
