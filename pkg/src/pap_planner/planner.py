"""Multi-lap planning: max-min TDMA schedule per lap, lap count, and velocity search."""

from __future__ import annotations

import json
import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .battery import BatteryModel, _initial_state, flight_time, slope
from .power import UavParams, total_power


@dataclass(frozen=True)
class RateTable:
    d: np.ndarray  # (M, N) bits/s

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2:
            raise ValueError("rate table must be 2-D (segments x GNs)")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("rates must be finite and non-negative")
        object.__setattr__(self, "d", d)

    @property
    def shape(self):
        return self.d.shape


@dataclass
class ScheduleResult:
    t_mn: np.ndarray
    t_star: float  # bits per lap delivered to the worst GN
    feasible: bool


def maxmin_schedule(rates: RateTable | np.ndarray, t_m) -> ScheduleResult:
    """maximise t s.t. sum_m T_mn d_mn >= t for all n, sum_n T_mn <= t_m, T_mn >= 0.

    ``t_m`` is a scalar (same for all segments) or a length-M vector.
    """
    d = rates.d if isinstance(rates, RateTable) else RateTable(rates).d
    M, N = d.shape
    t_m = np.broadcast_to(np.asarray(t_m, dtype=float), (M,))
    if np.any(t_m <= 0):
        raise ValueError("segment times must be positive")
    if np.any(d.max(axis=0) <= 0):
        return ScheduleResult(np.zeros((M, N)), 0.0, False)
    # rescale so the LP is well conditioned regardless of rate magnitude
    scale = d.max()
    ds = d / scale
    nv = M * N + 1
    c = np.zeros(nv)
    c[-1] = -1.0
    # -sum_m T_mn d_mn + t <= 0
    a_gn = np.zeros((N, nv))
    for n in range(N):
        a_gn[n, n:M * N:N] = -ds[:, n]
    a_gn[:, -1] = 1.0
    a_seg = np.zeros((M, nv))
    for m in range(M):
        a_seg[m, m * N:(m + 1) * N] = 1.0
    res = linprog(c, A_ub=np.vstack([a_gn, a_seg]), b_ub=np.r_[np.zeros(N), t_m],
                  bounds=[(0, None)] * nv, method="highs")
    if res.status != 0:
        raise RuntimeError(f"scheduling LP failed: {res.message}")
    t_mn = np.clip(res.x[:-1].reshape(M, N), 0.0, None)
    # drop round-off overshoot of the per-segment budget
    over = t_mn.sum(axis=1) / t_m
    t_mn /= np.maximum(over, 1.0)[:, None]
    t_star = float((t_mn * d).sum(axis=0).min())
    return ScheduleResult(t_mn, t_star, t_star > 0)


@dataclass
class PlanSolution:
    velocity: float
    t_m: np.ndarray  # (M,) s
    t_mn: np.ndarray  # (M, N) s, one lap
    n_lap: int
    energy_total: float  # J
    bits_per_gn: np.ndarray  # delivered over all laps
    gee: float  # bits/J, N*Q over energy
    q_bits: float
    power: float = math.nan  # W at the planned velocity
    t_max: float = math.nan  # s, battery limit at that power
    feasible: bool = True
    reason: str = ""

    @property
    def lap_time(self) -> float:
        return float(np.sum(self.t_m))

    @property
    def mission_time(self) -> float:
        return self.n_lap * self.lap_time

    def recomputed_gee(self) -> float:
        return len(self.bits_per_gn) * self.q_bits / self.energy_total

    def to_json(self) -> dict:
        return {
            "velocity": self.velocity,
            "n_lap": self.n_lap,
            "gee": self.gee,
            "energy_total": self.energy_total,
            "lap_time": self.lap_time,
            "mission_time": self.mission_time,
            "power": self.power,
            "t_max": self.t_max,
            "q_bits": self.q_bits,
            "bits_per_gn": [float(b) for b in self.bits_per_gn],
            "feasible": self.feasible,
            "reason": self.reason,
            "t_m": [float(t) for t in self.t_m],
        }

    def write(self, json_path, csv_path=None) -> None:
        with open(json_path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
        if csv_path is not None:
            n = self.t_mn.shape[1]
            header = "segment,t_m," + ",".join(f"t_gn{k}" for k in range(n))
            rows = np.column_stack([np.arange(len(self.t_m)), self.t_m, self.t_mn])
            np.savetxt(csv_path, rows, delimiter=",", header=header, comments="", fmt="%.10g")


@lru_cache(maxsize=4096)
def _t_max(battery: BatteryModel, power: float, dt: float) -> float:
    return flight_time(battery, power, dt).duration


def infeasible_plan(v, seg_lengths, n_gn, q_bits, reason, power=math.nan, t_max=math.nan) -> PlanSolution:
    m = len(seg_lengths)
    return PlanSolution(float(v), np.asarray(seg_lengths) / v, np.zeros((m, n_gn)), 0, math.inf,
                        np.zeros(n_gn), 0.0, q_bits, power, t_max, False, reason)


def plan_for_velocity(rates: RateTable, seg_lengths, q_bits: float, v: float, uav: UavParams,
                      battery: BatteryModel, dt: float = 1.0, t_max: float | None = None) -> PlanSolution:
    """Fixed-velocity multi-lap plan: same schedule every lap, just enough laps for Q bits."""
    if v <= 0:
        raise ValueError("velocity must be positive")
    if q_bits <= 0:
        raise ValueError("Q must be positive")
    seg_lengths = np.asarray(seg_lengths, dtype=float)
    n_gn = rates.shape[1]
    t_m = seg_lengths / v
    power = float(total_power(uav, v))
    if t_max is None:
        t_max = _t_max(battery, power, dt)
    sched = maxmin_schedule(rates, t_m)
    if not sched.feasible:
        return infeasible_plan(v, seg_lengths, n_gn, q_bits, "a GN has zero rate on every segment", power, t_max)
    n_lap = max(1, math.ceil(q_bits / sched.t_star * (1 - 1e-12)))
    lap_time = float(t_m.sum())
    if (n_lap + 1) * lap_time > t_max:
        return infeasible_plan(v, seg_lengths, n_gn, q_bits, "battery limit", power, t_max)
    energy = n_lap * lap_time * power
    bits = n_lap * (sched.t_mn * rates.d).sum(axis=0)
    return PlanSolution(float(v), t_m, sched.t_mn, n_lap, energy, bits, n_gn * q_bits / energy,
                        q_bits, power, t_max)


@dataclass
class E2p2Result:
    best: PlanSolution | None
    per_velocity: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.best is not None


def e2p2(rates: RateTable, seg_lengths, q_bits: float, uav: UavParams, battery: BatteryModel,
         velocities: Sequence[float] = tuple(range(1, 26)), dt: float = 1.0,
         early_break: bool = False) -> E2p2Result:
    """Velocity loop: plan at each velocity and keep the highest-GEE feasible plan.

    With ``early_break`` the loop stops at the first feasible velocity whose GEE does not
    improve on the previous feasible one.
    """
    plans, best = [], None
    last_gee = -math.inf
    for v in velocities:
        plan = plan_for_velocity(rates, seg_lengths, q_bits, float(v), uav, battery, dt)
        plans.append(plan)
        if not plan.feasible:
            continue
        if best is None or plan.gee > best.gee:
            best = plan
        if early_break and plan.gee <= last_gee:
            break
        last_gee = plan.gee
    return E2p2Result(best, plans)


@dataclass(frozen=True)
class ReplayResult:
    completed: bool
    min_voltage: float
    elapsed: float  # s simulated before finishing or failing


def replay_profile(battery: BatteryModel, powers, durations, dt: float = 1.0) -> ReplayResult:
    """Step the discharge model through a piecewise-constant power profile.

    Same per-step update as the constant-power estimator; fails when the voltage drops
    under cutoff or the drawn energy exceeds the current-dependent capacity.
    """
    powers = np.asarray(powers, dtype=float)
    durations = np.asarray(durations, dtype=float)
    n = battery.n_cells
    v, _ = _initial_state(battery, float(powers[0]))
    e_tot, t, v_min = 0.0, 0.0, v
    for p, dur in zip(powers, durations):
        steps = max(1, int(round(dur / dt)))
        h = dur / steps
        for _ in range(steps):
            i = p / (v * n)
            if i > battery.max_cell_current:
                return ReplayResult(False, v_min, t)
            e = i * v * h / 3600.0
            e_tot += e
            if e_tot > float(battery.f_e(i)):
                return ReplayResult(False, v_min, t)
            v = v - slope(battery, i) * e
            v_min = min(v_min, v)
            t += h
            if v < battery.v_cutoff:
                return ReplayResult(False, v_min, t)
    return ReplayResult(True, v_min, t)
