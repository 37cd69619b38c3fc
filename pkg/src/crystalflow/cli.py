"""Batch front end: run, converge, energy, validate.

Every subcommand takes a JSON config (see config.py for the schema) and
writes its artifacts under the config's out_dir, which the CRYSTAL_OUT
environment variable overrides.  Exit codes: 0 on success, 1 when the
simulation itself fails, 2 for configuration problems.  All floats in CSV
output carry 17 significant digits, so a rerun of the same config produces
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, build_problem, make_angular, parse_config
from .dynamics import ConstantNeumann
from .energy import (
    angular_to_cartesian,
    check_growth_conditions,
    check_strict_stability,
    frank_diagram,
    wulff_polygon,
)
from .errors import ConfigError, CoverageError, CrystalflowError, GridError, NotStrictlyStable
from .evolve import (
    IntegratorOptions,
    run,
    write_events_jsonl,
    write_monitors_csv,
    write_snapshots_csv,
)
from .metrics import compare, fit_rate, write_convergence_csv
from .profile import initial_fit_report, validate
from .reference import FourierSolution, fd_reference
from .svg import frank_diagram_svg, profile_snapshots_svg, wulff_polygon_svg

__all__ = ["main", "cmd_run", "cmd_converge", "cmd_energy", "cmd_validate"]


def _out_dir(config: RunConfig) -> Path:
    override = os.environ.get("CRYSTAL_OUT")
    d = Path(override) if override else Path(config.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)


def _execute(config: RunConfig, out: Path):
    """One simulation: build, evolve, write artifacts into out."""
    problem = build_problem(config)
    options = IntegratorOptions(t_end=config.t_end, snapshot_times=config.snapshot_times())
    trajectory = run(problem.profile, problem.model, problem.bc, options)
    write_snapshots_csv(trajectory, out / "snapshots.csv")
    write_monitors_csv(trajectory, out / "monitors.csv")
    write_events_jsonl(trajectory, out / "events.jsonl")
    (out / "final_profile.json").write_text(trajectory.final.to_json(trajectory.t_final))
    profile_snapshots_svg(trajectory.snapshots, out / "snapshots.svg")
    return problem, trajectory


def cmd_run(config: RunConfig) -> int:
    out = _out_dir(config)
    _, trajectory = _execute(config, out)
    print(
        f"run: t = {trajectory.t_final:.6g}, {trajectory.n_steps} steps "
        f"({trajectory.n_rejected} rejected), {len(trajectory.events)} events, "
        f"{trajectory.final.n_faces} faces -> {out}"
    )
    return 0


def _reference_callables(config: RunConfig, problem):
    """Per-snapshot (u, ux) samplers for the configured oracle."""
    times = config.snapshot_times()
    if problem.u0 is not None:
        u0 = problem.u0
    else:
        prof = problem.profile
        u0 = lambda x: float(prof.evaluate(x))

    # exact series where one exists; the dense solver everywhere else
    if config.mode == "heat" and config.bc["kind"] == "dirichlet0":
        name = config.initial["name"]
        if name in ("sine", "parabola"):
            base = FourierSolution.sine(1.0) if name == "sine" else FourierSolution.parabola()
            sol = FourierSolution(config.initial["amplitude"] * base.coefficients)
            return lambda t: ((lambda x: sol.u(x, t)), (lambda x: sol.ux(x, t)))

    kind = "neumann" if config.bc["kind"] == "neumann" else "dirichlet"
    slopes = (config.bc["a"], config.bc["b"]) if kind == "neumann" else None
    ref = fd_reference(
        u0,
        times,
        mode=config.mode,
        energy=problem.smooth,
        bc_kind=kind,
        neumann_slopes=slopes,
        nx=1024,
    )
    return ref.sample


def _converge_one(args: tuple) -> dict:
    """Worker for one sweep member; returns the rows and sup error."""
    config, m = args
    cfg = config.with_m(m)
    sub = _out_dir(config) / f"m={m:.17g}"
    sub.mkdir(parents=True, exist_ok=True)
    problem, trajectory = _execute(cfg, sub)
    sampler = _reference_callables(cfg, problem)
    n0 = trajectory.snapshots[0][1].n_faces
    rows = []
    sup_h1 = 0.0
    for t, prof in trajectory.snapshots:
        u_ref, ux_ref = sampler(t)
        rep = compare(prof, u_ref, ux_ref, t)
        sup_h1 = max(sup_h1, rep.h1)
        rows.append({"m": m, "N0": n0, "t": rep.t, "l2_u": rep.l2_u, "l2_ux": rep.l2_ux, "h1": rep.h1})
    return {"m": m, "rows": rows, "sup_h1": sup_h1}


def cmd_converge(config: RunConfig, m_list: list[float], jobs: int = 1) -> int:
    if len(m_list) < 3:
        raise ConfigError(f"--m needs at least 3 values, got {len(m_list)}")
    if any(not x > 0 for x in m_list) or any(b >= a for a, b in zip(m_list, m_list[1:])):
        raise ConfigError("--m values must be positive and strictly decreasing")
    out = _out_dir(config)

    work = [(config, m) for m in m_list]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_converge_one, work))
    else:
        results = [_converge_one(w) for w in work]
    results.sort(key=lambda r: -r["m"])

    rows = [row for r in results for row in r["rows"]]
    write_convergence_csv(rows, out / "convergence.csv")
    ms = [r["m"] for r in results]
    sups = [r["sup_h1"] for r in results]
    rate = fit_rate(ms, sups)
    (out / "rate.json").write_text(
        json.dumps({"rate": rate, "sup_h1": {f"{m:.17g}": s for m, s in zip(ms, sups)}}, indent=2) + "\n"
    )
    for m, s in zip(ms, sups):
        print(f"m = {m:<8g} sup-t H1 error = {s:.6e}")
    print(f"fitted rate: {rate:.4f} -> {out}")
    return 0


def cmd_energy(config: RunConfig) -> int:
    out = _out_dir(config)
    if isinstance(config.energy, str):
        raise ConfigError("energy diagnostics need an angular Fourier spec, not a builtin name")
    fe = make_angular(config.energy)
    margin = check_strict_stability(fe)

    frank_diagram_svg(frank_diagram(fe), out / "frank.svg")
    th = np.linspace(0.0, 2.0 * np.pi, 72, endpoint=False)
    wp = wulff_polygon(th, np.asarray(fe.f(th), dtype=float))
    wulff_polygon_svg(wp.vertices, out / "wulff.svg")

    smooth = angular_to_cartesian(fe, check_stability=False)
    growth = check_growth_conditions(smooth, (config.grid.lo, config.grid.hi))
    report = {
        "stability_margin": margin,
        "c1": growth.c1,
        "c2": growth.c2,
        "c3": growth.c3,
        "slope_range": list(growth.slope_range),
        "wulff_facets": len(wp.facet_lengths),
    }
    (out / "energy_report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(
        f"energy: stability margin {margin:.6g}, growth c1 = {growth.c1:.6g}, "
        f"c2 = {growth.c2:.6g}, c3 = {growth.c3:.6g} -> {out}"
    )
    return 0


def cmd_validate(config: RunConfig) -> int:
    problem = build_problem(config)
    problems = validate(problem.profile)
    if problems:
        raise ConfigError("constructed profile is not admissible: " + "; ".join(problems))
    print(f"config ok: {problem.profile.n_faces} faces on {len(problem.model.grid)} slopes, mode {config.mode}")
    if problem.u0 is not None:
        rep = initial_fit_report(problem.profile, problem.u0, problem.du0)
        print(
            f"fit: sup slope error {rep['sup_slope_error']:.3e} (m = {rep['m']:.3g}), "
            f"sup value error {rep['sup_value_error']:.3e}, TV(u0') = {rep['total_variation']:.3g}"
        )
    if isinstance(problem.bc, ConstantNeumann):
        g = problem.model.grid
        try:
            g.index_of(problem.bc.a), g.index_of(problem.bc.b)
        except GridError as exc:
            raise ConfigError(f"neumann slopes must be admissible: {exc}") from None
    return 0


def _parse_m_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"--m expects comma-separated numbers: {exc}") from None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="crystalflow", description="faceted curvature flow runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation, full artifact set")
    p_run.add_argument("config")

    p_conv = sub.add_parser("converge", help="fineness sweep against the oracle")
    p_conv.add_argument("config")
    p_conv.add_argument("--m", required=True, help="comma-separated decreasing fineness values")
    p_conv.add_argument("--jobs", type=int, default=1, help="concurrent runs")

    p_energy = sub.add_parser("energy", help="frank/wulff diagrams and growth report")
    p_energy.add_argument("config")

    p_val = sub.add_parser("validate", help="parse, build, and check without running")
    p_val.add_argument("config")

    args = parser.parse_args(argv)
    try:
        config = _load(args.config)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "converge":
            return cmd_converge(config, _parse_m_list(args.m), jobs=args.jobs)
        if args.command == "energy":
            return cmd_energy(config)
        return cmd_validate(config)
    except (ConfigError, CoverageError, NotStrictlyStable) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CrystalflowError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
