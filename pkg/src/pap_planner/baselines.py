"""Comparison policies: fly-hover-communicate and the single-lap fractional program.

The single-lap solver alternates an outer convex-restriction loop (slack linearised
around the previous induced-power slack) with an inner parametric loop for the ratio
of delivered bits to energy.  Every inner problem is convex and goes to cvxpy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .battery import BatteryModel, flight_time
from .planner import PlanSolution, RateTable, maxmin_schedule
from .power import UavParams, hover_power, induced_slack, power_constants, segment_energy, total_power


@dataclass
class HoverPlan:
    loi_order: tuple
    hover_times: np.ndarray  # s per LoI, in visiting order
    fly_time: float  # s
    energy: float  # J
    gee: float  # bits/J
    v_max: float
    assignment: np.ndarray = None  # LoI index serving each GN
    q_bits: float = 0.0

    @property
    def mission_time(self) -> float:
        return self.fly_time + float(np.sum(self.hover_times))


def fly_hover_plan(hover_rates, path_length: float, q_bits: float, uav: UavParams, v_max: float,
                   loi_order=None) -> HoverPlan:
    """Fly between LoIs at ``v_max``, hover at each LoI until its GNs have Q bits.

    ``hover_rates`` is (n_loi, N): rate of each GN while hovering above each LoI.  Every GN
    is served from the LoI where its rate is highest.
    """
    r = np.atleast_2d(np.asarray(hover_rates, dtype=float))
    if q_bits <= 0 or v_max <= 0:
        raise ValueError("Q and v_max must be positive")
    best = r.max(axis=0)
    if np.any(best <= 0):
        raise ValueError("a GN has zero rate from every LoI")
    assign = r.argmax(axis=0)
    n_loi = r.shape[0]
    hover = np.array([sum(q_bits / r[j, n] for n in np.flatnonzero(assign == j)) for j in range(n_loi)])
    fly = path_length / v_max
    energy = hover_power(uav) * hover.sum() + float(total_power(uav, v_max)) * fly
    order = tuple(range(n_loi)) if loi_order is None else tuple(loi_order)
    return HoverPlan(order, hover, fly, energy, r.shape[1] * q_bits / energy, v_max, assign, q_bits)


def convexified_energy(params: UavParams, seg_len, t, z):
    """C1 (T + 3 D^2/(T v_tip^2)) + C2 D^3/T^2 + C3 z; equals T P(D/T) at the exact slack."""
    t = np.asarray(t, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(t <= 0) or np.any(z <= 0):
        raise ValueError("T and z must be positive")
    c = power_constants(params)
    d = np.asarray(seg_len, dtype=float)
    return c.c1 * (t + 3 * d ** 2 / (t * c.v_tip ** 2)) + c.c2 * d ** 3 / t ** 2 + c.c3 * z


def taylor_constraint(params: UavParams, seg_len, t, z, z_ref):
    """Residual T^4/z^2 - (z_ref^2 + 2 z_ref (z - z_ref) + D^2)/C4; feasible when <= 0."""
    if np.any(np.asarray(z_ref) <= 0):
        raise ValueError("z_ref must be positive")
    c4 = power_constants(params).c4
    t, z, z_ref, d = (np.asarray(a, dtype=float) for a in (t, z, z_ref, seg_len))
    return t ** 4 / z ** 2 - (z_ref ** 2 + 2 * z_ref * (z - z_ref) + d ** 2) / c4


@dataclass
class SingleLapState:
    t_m: np.ndarray
    t_mn: np.ndarray
    z_m: np.ndarray
    lam: float
    iter_scp: int
    iter_dink: int


@dataclass
class SingleLapResult:
    plan: PlanSolution
    state: SingleLapState
    speeds: np.ndarray  # m/s per segment
    init_gee: float  # bits/J
    trace: list = field(default_factory=list)  # solver units: bits in Q, energy in kJ
    scp_gee: list = field(default_factory=list)  # true GEE (bits/J) after each accepted outer step
    converged: bool = True
    uncapped: bool = False

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["scp", "dink", "lam", "num", "den", "f", "gee"])
            w.writeheader()
            for row in self.trace:
                w.writerow(row)


def fly_hover_initial_times(seg_lengths, loi_segments, hover_times, v_max):
    """Segment times of the fly-hover policy: v_max everywhere, hover folded into the LoI segments."""
    t = np.asarray(seg_lengths, dtype=float) / v_max
    for s, h in zip(loi_segments, hover_times):
        t[s] += h
    return t


def _delivery_schedule(rates: np.ndarray, t_m: np.ndarray, q_bits: float):
    sched = maxmin_schedule(rates, t_m)
    return sched, sched.t_star >= q_bits * (1 - 1e-9)


class _InnerProblem:
    """max num(T_mn) - lam * den(T, z) over the restricted set, parametrised in lam and z_ref."""

    def __init__(self, rates, seg_len, q_bits, params: UavParams, v_max, t_max, uncapped):
        M, N = rates.shape
        c = power_constants(params)
        d = np.asarray(seg_len, dtype=float)
        self.energy_unit = 1e3  # J
        self.T = cp.Variable(M, pos=True)
        self.Tmn = cp.Variable((M, N), nonneg=True)
        self.z = cp.Variable(M, pos=True)
        self.s = cp.Variable(M, nonneg=True)
        self.lam = cp.Parameter(nonneg=True)
        self.zref = cp.Parameter(M, pos=True)
        self.zref_sq = cp.Parameter(M, nonneg=True)
        bits = cp.sum(cp.multiply(self.Tmn, rates / q_bits), axis=0)  # in units of Q
        self.num = cp.sum(bits) if uncapped else cp.sum(cp.minimum(bits, 1.0))
        self.den = (c.c1 * cp.sum(self.T) + cp.sum(cp.multiply(3 * c.c1 * d ** 2 / c.v_tip ** 2, cp.inv_pos(self.T)))
                    + cp.sum(cp.multiply(c.c2 * d ** 3, cp.power(self.T, -2))) + c.c3 * cp.sum(self.z)) / self.energy_unit
        rhs = (2 * cp.multiply(self.zref, self.z) - self.zref_sq + d ** 2) / c.c4
        cons = [
            self.T >= d / v_max,
            cp.sum(self.T) <= t_max,
            cp.sum(self.Tmn, axis=1) <= self.T,
            bits >= 1.0,
            # T^4/z^2 <= rhs  <=>  T^2 <= z s,  s^2 <= rhs
            cp.SOC(self.z + self.s, cp.vstack([2 * self.T, self.z - self.s]), axis=0),
            cp.power(self.s, 2) <= rhs,
        ]
        self.prob = cp.Problem(cp.Maximize(self.num - self.lam * self.den), cons)

    def solve(self, lam, z_ref):
        self.lam.value = lam
        self.zref.value = z_ref
        self.zref_sq.value = z_ref ** 2
        self.prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
        if self.prob.status not in ("optimal", "optimal_inaccurate"):
            return None
        return (np.maximum(self.T.value, 0), np.maximum(self.Tmn.value, 0), self.z.value,
                float(self.num.value), float(self.den.value))


def single_lap_solve(rates: RateTable | np.ndarray, seg_lengths, q_bits: float, uav: UavParams,
                     battery: BatteryModel, v_max: float, init_t: np.ndarray, dt: float = 1.0,
                     t_max: float | None = None, uncapped: bool = False, eps: float = 1e-6,
                     scp_tol: float = 1e-4, max_scp: int = 30, max_dink: int = 50) -> SingleLapResult:
    """Single-lap plan maximising bits per Joule with all data delivered in one pass.

    ``init_t`` are feasible segment times (e.g. from the fly-hover policy).  By default the
    numerator counts useful bits, sum_n min(Q, delivered_n); with ``uncapped`` it counts
    every transmitted bit.
    """
    d_rates = rates.d if isinstance(rates, RateTable) else RateTable(rates).d
    seg = np.asarray(seg_lengths, dtype=float)
    M, N = d_rates.shape
    if t_max is None:
        t_max = flight_time(battery, hover_power(uav), dt).duration
    t = np.maximum(np.asarray(init_t, dtype=float), seg / v_max)
    sched, ok = _delivery_schedule(d_rates, t, q_bits)
    if not ok:
        raise ValueError("initial segment times cannot deliver Q to every GN")
    if t.sum() > t_max:
        raise ValueError("initial plan exceeds the battery limit")

    def true_num(tmn):
        b = (tmn * d_rates).sum(axis=0) / q_bits
        return float(b.sum() if uncapped else np.minimum(b, 1.0).sum())

    def true_den(tt):
        return float(np.sum(segment_energy(uav, seg, tt))) / 1e3

    tmn = sched.t_mn * np.minimum(1.0, q_bits / np.maximum((sched.t_mn * d_rates).sum(axis=0), 1e-300))[None, :]
    if uncapped:
        tmn = sched.t_mn
    gee = true_num(tmn) / true_den(t)
    init_gee = gee
    inner = _InnerProblem(d_rates, seg, q_bits, uav, v_max, t_max, uncapped)
    z_ref = np.asarray(induced_slack(uav, seg, t), dtype=float)
    trace, scp_gee = [], [gee]
    lam = gee
    converged = True
    it_scp = it_d = 0
    for it_scp in range(1, max_scp + 1):
        best_inner = None
        lam = max(lam, 0.0)
        for it_d in range(1, max_dink + 1):
            out = inner.solve(lam, z_ref)
            if out is None:
                converged = False
                break
            t_new, tmn_new, z_new, num, den = out
            f = num - lam * den
            trace.append({"scp": it_scp, "dink": it_d, "lam": lam, "num": num, "den": den, "f": f,
                          "gee": num / den})
            best_inner = out
            if abs(f) < eps * den:
                break
            lam = num / den
        else:
            converged = False
        if best_inner is None:
            break
        t_new, tmn_new, _, _, _ = best_inner
        new_gee = true_num(tmn_new) / true_den(t_new)
        if new_gee < gee:
            break  # round-off; the restriction guarantees no loss in exact arithmetic
        rel = (new_gee - gee) / gee
        t, tmn, gee = t_new, tmn_new, new_gee
        scp_gee.append(gee)
        z_ref = np.asarray(induced_slack(uav, seg, t), dtype=float)
        lam = gee
        if rel < scp_tol:
            break

    energy = float(np.sum(segment_energy(uav, seg, t)))
    bits = (tmn * d_rates).sum(axis=0)
    speeds = seg / t
    plan = PlanSolution(float(seg.sum() / t.sum()), t, tmn, 1, energy, bits, true_num(tmn) * q_bits / energy, q_bits,
                        energy / t.sum(), t_max)
    state = SingleLapState(t, tmn, z_ref, lam, it_scp, it_d)
    to_bits_per_j = q_bits / 1e3
    return SingleLapResult(plan, state, speeds, init_gee * to_bits_per_j, trace,
                           [g * to_bits_per_j for g in scp_gee], converged, uncapped)
