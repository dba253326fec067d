"""``dronecover`` command line: simulate, paths, report.

Exit codes: 0 success, 1 configuration or input error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .adaptive_control import speed_thresholds
from .analysis import Heatmap, coefficient_of_variation, rasterize, uniformity_report, write_pgm, write_tsv
from .geometry import AnnularSector, GeometryError, build_rect_grid
from .ideal_process import efficiency_bound
from .scenario import load_scenario
from .sim_engine import ConfigError, RunMetrics, run_replicas, scene_for, simulate
from .trajectory import coverage_complete, ensure_cell_coverage, straight_paths


class RunFailure(RuntimeError):
    pass


# ------------------------------------------------------------------ simulate


def cmd_simulate(args) -> int:
    cfg = load_scenario(args.config, seed=args.seed)
    if args.replicas < 1:
        raise ConfigError("--replicas: must be >= 1")
    out = Path(args.out)
    try:
        (out / "coverage").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"--out: cannot create {str(out)!r}: {exc.strerror}") from None

    first = simulate(cfg)
    metrics = first.metrics
    if args.replicas > 1:
        rest = replace(cfg, seed=cfg.seed + 1)
        metrics = metrics.merge(run_replicas(rest, args.replicas - 1, workers=args.workers))

    (out / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=1) + "\n")

    hm = Heatmap.for_grid(first.scene.grid, metrics.mean_occupancy.tolist())
    write_pgm(out / "heatmap.p5.pgm", rasterize(hm))
    write_tsv(out / "heatmap.tsv", ("cell", "mean_occupancy"), zip(range(1, len(hm.values) + 1), hm.values))
    width = len(str(first.scene.grid.cell_count))
    for cell, series in first.series.items():
        write_tsv(out / "coverage" / f"cell_{cell:0{width}d}.tsv", ("t_s", "p_l"), series)

    print(f"wrote {out} (T_m {metrics.t_m:.1f} s, eta {metrics.eta:.4f}, {metrics.replicas} replica(s))")
    return 0


# --------------------------------------------------------------------- paths


def paths_document(cfg) -> dict:
    if isinstance(cfg.region, AnnularSector):
        paths = scene_for(cfg).paths
        grid = paths.grid
    else:
        grid = build_rect_grid(cfg.region, cfg.cell_size)
        base = straight_paths(cfg.region.depot, cfg.houses, grid)
        paths = ensure_cell_coverage(base, grid)
    if not coverage_complete(paths):
        raise RunFailure(f"cells without any crossing: {paths.uncovered_cells()}")
    totals = paths.cell_lengths()
    return {
        "cells": [
            {"index": c.index, "area_m2": c.area, "crossing_length_m": totals[c.index]} for c in grid.cells
        ],
        "paths": [
            {
                "house": p.house_index,
                "waypoints": [[w.x, w.y] for w in p.waypoints],
                "detour_waypoints": len(p.waypoints) - 2,
                "length_m": p.total_length,
                "crossings": [{"cell": c.cell, "s_in_m": c.s_in, "s_out_m": c.s_out} for c in p.crossings],
            }
            for p in paths.paths
        ],
    }


def cmd_paths(args) -> int:
    cfg = load_scenario(args.config)
    doc = paths_document(cfg)
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    detours = sum(p["detour_waypoints"] for p in doc["paths"])
    print(f"wrote {args.out}: {len(doc['paths'])} paths, {len(doc['cells'])} cells, {detours} detour waypoint(s)")
    return 0


# -------------------------------------------------------------------- report


def feasibility(metrics: RunMetrics) -> tuple[bool | None, list[str]]:
    """Check observed gaps against the speed thresholds, cell by cell.

    ``None`` when the run has no speed bounds or target to judge.
    """
    if metrics.v_min is None or metrics.v_max is None or metrics.p_star is None:
        return None, []
    ok, lines = True, []
    for c in metrics.cells:
        if c.gap_min is None or c.crossing_max is None:
            lines.append(f"  cell {c.index}: not enough visits")
            continue
        need_max, _ = speed_thresholds(c.crossing_max, metrics.p_star, c.gap_min, c.gap_max)
        _, allow_min = speed_thresholds(c.crossing_min, metrics.p_star, c.gap_min, c.gap_max)
        good = metrics.v_max >= need_max and metrics.v_min <= allow_min
        ok &= good
        if not good:
            lines.append(
                f"  cell {c.index}: need v_max >= {need_max:.3f} and v_min <= {allow_min:.3f} m/s "
                f"(gaps {c.gap_min:.2f}..{c.gap_max:.2f} s)"
            )
    return ok, lines


def report_text(metrics: RunMetrics) -> str:
    out = [
        f"policy           {metrics.policy}",
        f"drones           {metrics.drones}",
        f"packages         {metrics.packages}",
        f"replicas         {metrics.replicas}",
        f"T_m              {metrics.t_m:.3f} s",
        f"lower bound      {metrics.lower_bound:.3f} s",
    ]
    ub = metrics.upper_bound
    out.append(f"upper bound      {ub:.3f} s" if ub is not None else "upper bound      n/a")
    out.append(f"eta              {metrics.eta:.6f}")
    if metrics.policy == "ideal":
        floor = efficiency_bound(metrics.packages, metrics.drones)
        verdict = "ok" if metrics.eta >= floor else "VIOLATED"
        out.append(f"eta floor        {floor:.6f} ({verdict})")
    out.append(f"late fraction    {metrics.late_fraction:.6f} (delivery > {metrics.late_threshold:g} s)")
    occ = metrics.mean_occupancy
    if metrics.snapshots and occ.sum() > 0 and len(occ) > 1:
        rep = uniformity_report(occ, metrics.areas)
        out.append(f"max rel. dev.    {rep.max_relative_deviation:.6f}")
        out.append(f"chi-square       {rep.chi_square:.6f}")
        out.append(f"occupancy CV     {coefficient_of_variation(occ):.6f}")
    else:
        out.append("uniformity       n/a (no occupancy recorded)")
    ok, lines = feasibility(metrics)
    if ok is None:
        out.append("speed bounds     n/a (policy has no speed bounds)")
    else:
        out.append(f"speed bounds     {'TRUE' if ok else 'FALSE'} (feasible for observed gaps)")
        out.extend(lines)
    return "\n".join(out)


def cmd_report(args) -> int:
    path = Path(args.run) / "metrics.json"
    try:
        doc = json.loads(path.read_text())
        metrics = RunMetrics.from_dict(doc)
    except OSError:
        raise ConfigError(f"--run: missing {str(path)!r}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"--run: unreadable {str(path)!r}: {exc}") from None
    print(report_text(metrics))
    return 0


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dronecover", description="Delivery-drone coverage simulator.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write metrics, heatmap and coverage series")
    s.add_argument("--config", required=True, help="scenario JSON path or shipped scenario name")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    s.add_argument("--replicas", type=int, default=1, help="seeds seed..seed+K-1, merged")
    s.add_argument("--workers", type=int, default=os.cpu_count(), help="processes for extra replicas")
    s.set_defaults(func=cmd_simulate)

    p = sub.add_parser("paths", help="write the delivery paths and per-cell crossing lengths")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=cmd_paths)

    r = sub.add_parser("report", help="summarize a simulate output directory")
    r.add_argument("--run", required=True, help="directory written by simulate")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RunFailure, GeometryError, RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
