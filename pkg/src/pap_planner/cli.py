"""Batch command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .baselines import fly_hover_initial_times, fly_hover_plan, single_lap_solve
from .battery import fit_battery, read_datasheet, default_datasheet_path
from .planner import RateTable, e2p2
from .scenario import Scenario, build_world


def _parse_velocities(text: str) -> list:
    """'1:25' (inclusive, step 1), '2:20:2', or a comma list."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        return [float(v) for v in np.arange(lo, hi + step / 2, step)]
    return [float(v) for v in text.split(",") if v.strip()]


def load_scenario(args) -> Scenario:
    sc = Scenario.load(args.scenario) if args.scenario else Scenario()
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    planner = sc.planner
    if args.velocity_set:
        planner = replace(planner, velocities=_parse_velocities(args.velocity_set))
    if args.early_break:
        planner = replace(planner, early_break=True)
    return replace(sc, planner=planner)


def _emit(payload: dict, out: Path, name: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}.json", "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
    print(json.dumps(payload.get("summary", payload), indent=2, default=float))


def cmd_fit_battery(sc: Scenario, out: Path, args) -> None:
    path = sc.battery.datasheet or default_datasheet_path()
    m = fit_battery(read_datasheet(path), n_cells=sc.battery.n_cells)
    payload = {"summary": {"datasheet": str(path), "vmax_coeffs": m.vmax_coeffs, "vmin_coeffs": m.vmin_coeffs,
                           "energy_fit": {"p1": m.energy_fit.p1, "p2": m.energy_fit.p2, "q1": m.energy_fit.q1},
                           "r2": m.fit_r2, "current_range": m.current_range},
               "provenance": sc.provenance()}
    _emit(payload, out, "fit_battery")


def cmd_plan(sc: Scenario, out: Path, args) -> None:
    w = build_world(sc)
    res = e2p2(RateTable(w.rates), w.seg_lengths, sc.q_bits, sc.flight_uav(), sc.battery_model(),
               sc.planner.velocities, sc.battery.dt, sc.planner.early_break)
    out.mkdir(parents=True, exist_ok=True)
    if not res.found:
        _emit({"summary": {"found": False, "reasons": sorted({p.reason for p in res.per_velocity})},
               "provenance": sc.provenance()}, out, "plan")
        return
    res.best.write(out / "plan_solution.json", out / "plan_schedule.csv")
    rows = [{"velocity": p.velocity, "feasible": p.feasible, "n_lap": p.n_lap, "gee": p.gee,
             "energy_total": p.energy_total, "t_max": p.t_max} for p in res.per_velocity]
    ex.ExperimentResult("plan_velocity_sweep", rows, {}, sc.provenance()).write(out)
    np.savetxt(out / "waypoints.csv", w.path.waypoints, delimiter=",", header="x,y,z", comments="")
    summary = dict(res.best.to_json())
    summary.pop("t_m")
    _emit({"summary": summary, "provenance": sc.provenance()}, out, "plan")


def _hover(sc: Scenario, w):
    return fly_hover_plan(w.hover_beam.rates, w.path.length, sc.q_bits, sc.flight_uav(), sc.v_max())


def cmd_fly_hover(sc: Scenario, out: Path, args) -> None:
    w = build_world(sc)
    fh = _hover(sc, w)
    _emit({"summary": {"energy_j": fh.energy, "gee": fh.gee, "hover_times_s": fh.hover_times.tolist(),
                       "fly_time_s": fh.fly_time, "v_max": fh.v_max, "assignment": fh.assignment.tolist()},
           "provenance": sc.provenance()}, out, "fly_hover")


def cmd_single_lap(sc: Scenario, out: Path, args) -> None:
    w = build_world(sc)
    fh = _hover(sc, w)
    t0 = fly_hover_initial_times(w.seg_lengths, w.loi_segments, fh.hover_times, sc.v_max())
    sl = single_lap_solve(w.rates, w.seg_lengths, sc.q_bits, sc.flight_uav(), sc.battery_model(), sc.v_max(), t0,
                          sc.battery.dt)
    out.mkdir(parents=True, exist_ok=True)
    sl.write_trace(out / "single_lap_trace.csv")
    sl.plan.write(out / "single_lap_solution.json", out / "single_lap_schedule.csv")
    _emit({"summary": {"energy_j": sl.plan.energy_total, "gee": sl.plan.gee, "init_gee": sl.init_gee,
                       "scp_iterations": sl.state.iter_scp, "converged": sl.converged},
           "provenance": sc.provenance()}, out, "single_lap")


def _runner(fn):
    def run(sc: Scenario, out: Path, args) -> None:
        res = fn(sc)
        res.write(out)
        print(json.dumps(res.summary, indent=2, default=float))
    return run


COMMANDS = {
    "fit-battery": cmd_fit_battery,
    "flight-time": _runner(ex.run_flight_time_sweep),
    "battery-sizing": _runner(ex.run_battery_sizing),
    "pack": _runner(ex.run_pack_comparison),
    "irs-sweep": _runner(ex.run_irs_sweep),
    "plan": cmd_plan,
    "baseline-single-lap": cmd_single_lap,
    "baseline-fly-hover": cmd_fly_hover,
    "energy-comparison": _runner(ex.run_energy_comparison),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pap-planner", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--scenario", help="YAML scenario file (defaults are used for missing keys)")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="overrides the scenario seed")
    p.add_argument("--velocity-set", default=None, help="e.g. 1:25, 2:20:2 or 5,10,15")
    p.add_argument("--early-break", action="store_true", help="stop the velocity loop once GEE stops improving")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sc = load_scenario(args)
    COMMANDS[args.command](sc, Path(args.out), args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
