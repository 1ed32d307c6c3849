"""Experiment drivers shared by the CLI and the acceptance tests.

Every run writes its outputs plus a manifest.json holding the fully
resolved config document, the package version, wall-clock time, and the
summary rows, so a run can be reproduced bit-exactly from its manifest.
"""

from __future__ import annotations

import concurrent.futures
import json
import time
import warnings
from pathlib import Path

from . import __version__
from .assembly import assemble_matrix, assemble_rhs
from .config import RunConfig, serialize_config
from .convergence import empirical_order, refinement_ladder, sup_diff_on_common
from .grid import GridSpec, build_grid
from .observables import (
    Observable,
    check_resolution,
    constant_observable,
    mollified_crossing_speed,
    plastic_band,
)
from .sde import (
    BandObserver,
    CrossingObserver,
    SampleRecorder,
    simulate_paths,
    simulate_trajectory,
)
from .solver import (
    ResolventSolver,
    SolveReport,
    evaluate_statistic,
    magnitude_violations,
    solution_to_csv,
    solve_resolvent,
    summary_to_json,
)

__all__ = [
    "pde_statistic",
    "run_solve",
    "run_simulate",
    "run_crossing_sweep",
    "run_serviceability_sweep",
    "run_convergence",
    "run_cross_validate",
    "write_manifest",
]


def observable_from_config(cfg: RunConfig, a1=None, a2=None) -> Observable:
    if cfg.observable == "crossing":
        return mollified_crossing_speed(
            cfg.a1 if a1 is None else a1, cfg.resolved_eps0()
        )
    if cfg.observable == "band":
        return plastic_band(cfg.a2 if a2 is None else a2)
    return constant_observable(cfg.g_const)


def pde_statistic(cfg: RunConfig, g: Observable, matrix=None, grid=None) -> SolveReport:
    """Assemble (or reuse a prebuilt matrix) and solve for one observable."""
    if grid is None:
        grid = build_grid(cfg.grid)
    if g.kind == "crossing":
        check_resolution(g.params["eps0"], 2.0 * cfg.grid.x_bar / (cfg.grid.I - 1))
    sys = matrix if matrix is not None else assemble_matrix(grid, cfg.model, cfg.grid.lam)
    sys.rhs = assemble_rhs(grid, g, cfg.grid.lam)
    report = solve_resolvent(sys, cfg.solver)
    report.statistic, report.spread = evaluate_statistic(report.v, grid)
    report.bound_violations = magnitude_violations(
        report.v, grid, g.sup_norm(cfg.grid.x_bar, cfg.grid.y_bar, cfg.model.b)
    )
    return report


def write_manifest(out: Path, cfg: RunConfig, rows, wall_clock: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": __version__,
        "wall_clock_s": wall_clock,
        "config": serialize_config(cfg),
        "rows": rows,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def run_solve(cfg: RunConfig, out: Path) -> dict:
    """One assemble+solve; writes solution.csv and summary.json."""
    t0 = time.perf_counter()
    grid = build_grid(cfg.grid)
    report = pde_statistic(cfg, observable_from_config(cfg), grid=grid)
    out.mkdir(parents=True, exist_ok=True)
    solution_to_csv(report.v, grid, out / "solution.csv")
    summary_to_json(report, out / "summary.json")
    row = report.summary()
    write_manifest(out, cfg, [row], time.perf_counter() - t0)
    return row


def run_simulate(cfg: RunConfig, out: Path) -> dict:
    """Monte Carlo trajectory run; optional CSV dump of recorded states."""
    t0 = time.perf_counter()
    out.mkdir(parents=True, exist_ok=True)
    recorder = SampleRecorder() if cfg.record_stride else None
    stats = simulate_trajectory(
        cfg.sim,
        cfg.model,
        observers=[recorder] if recorder else (),
        box=(cfg.grid.x_bar, cfg.grid.y_bar),
    )
    if recorder is not None:
        xs, ys, zs = recorder.arrays()
        ts = recorder.times(cfg.sim.dt)
        stride = cfg.record_stride
        b = cfg.model.b
        with open(out / "trajectory.csv", "w") as fh:
            fh.write("t,x,y,z,phase\n")
            for m in range(0, len(ts), stride):
                z = zs[m, 0]
                phase = "plastic+" if z == b else ("plastic-" if z == -b else "elastic")
                fh.write(
                    f"{ts[m]:.12g},{xs[m, 0]:.12g},{ys[m, 0]:.12g},{z:.12g},{phase}\n"
                )
    row = {
        "n_observed": stats.n_observed,
        "n_events": len(stats.events),
        "final_x": stats.final.x,
        "final_y": stats.final.y,
        "final_z": stats.final.z,
        "outside_box_fraction": stats.outside_box_fraction,
    }
    write_manifest(out, cfg, [row], time.perf_counter() - t0)
    return row


def _mc_levels(cfg: RunConfig, levels, kind: str):
    """One shared Monte Carlo run serving every sweep level."""
    sim = cfg.sim
    if kind == "crossing":
        obs = CrossingObserver(levels, sim.dt, sim.n_paths)
    else:
        obs = BandObserver(levels, sim.n_paths)
    simulate_paths(sim, cfg.model, [obs])
    if kind == "crossing":
        return [obs.frequency(i) for i in range(len(levels))]
    return [obs.probability(i) for i in range(len(levels))]


def _pde_sweep(cfg: RunConfig, levels, kind: str, threads: int = 1):
    """Solve the resolvent system for each sweep level; ordered by input.

    All levels share the grid and matrix, so the incomplete factorization
    is built once and reused (this dominates the cost; the levels then run
    sequentially regardless of the thread count).
    """
    grid = build_grid(cfg.grid)
    lam = cfg.grid.lam
    solver = ResolventSolver(assemble_matrix(grid, cfg.model, lam), cfg.solver)

    reports = []
    for level in levels:
        if kind == "crossing" and abs(level) > cfg.grid.x_bar:
            warnings.warn(
                f"crossing level a1={level:g} lies outside the truncation box "
                f"(x_bar={cfg.grid.x_bar:g}); the statistic will be near zero"
            )
        g = (
            mollified_crossing_speed(level, cfg.resolved_eps0())
            if kind == "crossing"
            else plastic_band(level)
        )
        report = solver.solve(assemble_rhs(grid, g, lam))
        report.statistic, report.spread = evaluate_statistic(report.v, grid)
        report.bound_violations = magnitude_violations(
            report.v, grid, g.sup_norm(cfg.grid.x_bar, cfg.grid.y_bar, cfg.model.b)
        )
        reports.append(report)
    return reports


def _sweep_common(cfg: RunConfig, out: Path, kind: str, threads: int = 1):
    t0 = time.perf_counter()
    levels = list(cfg.sweep)
    reports = _pde_sweep(cfg, levels, kind, threads)
    mc = _mc_levels(cfg, levels, kind) if cfg.mc_enabled else [(float("nan"), float("nan"))] * len(levels)

    name = "a1,nu_pde,nu_mc,nu_mc_se" if kind == "crossing" else "a2,P_pde,P_mc,P_mc_se"
    rows = []
    for level, rep, (mv, mse) in zip(levels, reports, mc):
        rows.append(
            {
                "level": level,
                "pde": rep.statistic,
                "mc": mv,
                "mc_se": mse,
                "spread": rep.spread,
                "residual": rep.residual,
            }
        )
    out.mkdir(parents=True, exist_ok=True)
    csv = out / ("crossing_sweep.csv" if kind == "crossing" else "serviceability_sweep.csv")
    with open(csv, "w") as fh:
        fh.write(name + ",spread,residual\n")
        for r in rows:
            fh.write(
                f"{r['level']:.12g},{r['pde']:.12g},{r['mc']:.12g},"
                f"{r['mc_se']:.12g},{r['spread']:.12g},{r['residual']:.12g}\n"
            )
    _write_plot_script(out, csv.name, kind)
    write_manifest(out, cfg, rows, time.perf_counter() - t0)
    return rows


def _write_plot_script(out: Path, csv_name: str, kind: str) -> None:
    """Data-only plotting support: a gnuplot script next to the CSV."""
    label = "a_1" if kind == "crossing" else "a_2"
    ylabel = "crossings per unit time" if kind == "crossing" else "probability"
    script = (
        "set datafile separator ','\n"
        f"set xlabel '{label}'\n"
        f"set ylabel '{ylabel}'\n"
        "set key top right\n"
        f"plot '{csv_name}' skip 1 using 1:2 with linespoints title 'PDE', \\\n"
        f"     '{csv_name}' skip 1 using 1:3:(3*$4) with yerrorbars title 'MC'\n"
    )
    (out / "plot.gp").write_text(script)


def run_crossing_sweep(cfg: RunConfig, out: Path, threads: int = 1):
    """nu(a1) for each sweep value by the PDE route, plus MC when enabled."""
    return _sweep_common(cfg, out, "crossing", threads)


def run_serviceability_sweep(cfg: RunConfig, out: Path, threads: int = 1):
    """P(a2) for each sweep value; the MC column shares one sample set and
    is therefore exactly nondecreasing in a2."""
    return _sweep_common(cfg, out, "band", threads)


def run_convergence(cfg: RunConfig, out: Path, threads: int = 1):
    """Nested-refinement study for the configured observable.

    Each axis is refined n_refinements times while the other axes stay at
    the base resolution; consecutive-level sup differences and the order
    estimates between them are reported per axis.
    """
    t0 = time.perf_counter()
    g = observable_from_config(cfg)
    rows = []

    def solve_on(spec: GridSpec):
        grid = build_grid(spec)
        sys = assemble_matrix(grid, cfg.model, spec.lam)
        sys.rhs = assemble_rhs(grid, g, spec.lam)
        return solve_resolvent(sys, cfg.solver).v

    base_field = solve_on(cfg.grid)
    for axis in ("x", "y", "z"):
        ladder = refinement_ladder(cfg.grid, axis, cfg.n_refinements)
        fields = [base_field]
        specs = list(ladder.levels)
        if threads > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
                fields += list(pool.map(solve_on, specs[1:]))
        else:
            fields += [solve_on(spec) for spec in specs[1:]]
        diffs = [
            sup_diff_on_common(
                fields[m], fields[m + 1], specs[m], specs[m + 1], cfg.interior_only
            )
            for m in range(len(fields) - 1)
        ]
        spacing = {"x": "dx", "y": "dy", "z": "dz"}[axis]
        for m, spec in enumerate(specs):
            rows.append(
                {
                    "axis": axis,
                    "level": m,
                    "h": getattr(spec, spacing),
                    "diff": diffs[m - 1] if m >= 1 else float("nan"),
                    "order": (
                        empirical_order(diffs[m - 2], diffs[m - 1])
                        if m >= 2
                        else float("nan")
                    ),
                }
            )
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w") as fh:
        fh.write("axis,level,h,diff,order\n")
        for r in rows:
            fh.write(
                f"{r['axis']},{r['level']},{r['h']:.12g},{r['diff']:.12g},{r['order']:.12g}\n"
            )
    write_manifest(out, cfg, rows, time.perf_counter() - t0)
    return rows


def run_cross_validate(cfg: RunConfig, out: Path, threads: int = 1):
    """Both routes at matched settings for crossing and band observables.

    Crossing levels come from cfg.sweep when given (else a1); band radii
    from cfg.a2. Emits one comparison row per (kind, level).
    """
    t0 = time.perf_counter()
    a1_levels = list(cfg.sweep) if cfg.sweep else [cfg.a1]
    a2_levels = [cfg.a2]

    rows = []
    cross_reports = _pde_sweep(cfg, a1_levels, "crossing", threads)
    band_reports = _pde_sweep(cfg, a2_levels, "band", threads)
    sim = cfg.sim
    cobs = CrossingObserver(a1_levels, sim.dt, sim.n_paths)
    bobs = BandObserver(a2_levels, sim.n_paths)
    simulate_paths(sim, cfg.model, [cobs, bobs])
    for li, (level, rep) in enumerate(zip(a1_levels, cross_reports)):
        mv, mse = cobs.frequency(li)
        rows.append(
            {"kind": "crossing", "level": level, "pde": rep.statistic,
             "mc": mv, "mc_se": mse, "abs_diff": abs(rep.statistic - mv)}
        )
    for ri, (level, rep) in enumerate(zip(a2_levels, band_reports)):
        mv, mse = bobs.probability(ri)
        rows.append(
            {"kind": "band", "level": level, "pde": rep.statistic,
             "mc": mv, "mc_se": mse, "abs_diff": abs(rep.statistic - mv)}
        )
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "cross_validate.csv", "w") as fh:
        fh.write("kind,level,pde,mc,mc_se,abs_diff\n")
        for r in rows:
            fh.write(
                f"{r['kind']},{r['level']:.12g},{r['pde']:.12g},{r['mc']:.12g},"
                f"{r['mc_se']:.12g},{r['abs_diff']:.12g}\n"
            )
    write_manifest(out, cfg, rows, time.perf_counter() - t0)
    return rows
