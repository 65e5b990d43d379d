"""Li-ion discharge-curve regression and Peukert-aware flight-time estimation.

A datasheet row records, for one constant discharge current, the voltage at the
start of the linear part of the discharge curve, the voltage where the linear
part ends, and the energy drawn between the two.  Three regressions turn those
rows into continuous functions of cell current; the flight-time estimator then
steps the terminal voltage down along the current-dependent slope.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .power import GRAVITY, UavParams, hover_power


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class DischargeCurvePoint:
    current: float  # A per cell
    v_max: float  # V
    v_min: float  # V
    e_max: float  # Wh per cell

    def __post_init__(self):
        if not self.current > 0:
            raise ValueError("current must be positive")
        if not self.v_max > self.v_min > 0:
            raise ValueError("need v_max > v_min > 0")
        if not self.e_max > 0:
            raise ValueError("e_max must be positive")


@dataclass(frozen=True)
class RationalFit:
    """E(I) = (p1*I + p2) / (I + q1)."""

    p1: float
    p2: float
    q1: float

    def __call__(self, current):
        current = np.asarray(current, dtype=float)
        return (self.p1 * current + self.p2) / (current + self.q1)


@dataclass(frozen=True)
class BatteryModel:
    vmax_coeffs: tuple  # highest power first (np.polyval order), degree 1
    vmin_coeffs: tuple  # degree 2
    energy_fit: RationalFit
    n_cells: int = 17
    cell_mass: float = 0.05  # kg
    v_cutoff: float = 3.2
    v_rated: float = 3.67
    fit_r2: tuple = (1.0, 1.0, 1.0)
    current_range: tuple = (0.0, math.inf)
    extrapolation_margin: float = 2.0  # A beyond the fitted range
    max_cell_current: float = 10.0

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.v_cutoff < 0:
            raise ValueError("v_cutoff must be non-negative")

    def f_vmax(self, current):
        return np.polyval(self.vmax_coeffs, current)

    def f_vmin(self, current):
        return np.polyval(self.vmin_coeffs, current)

    def f_e(self, current):
        return self.energy_fit(current)

    def with_cells(self, n_cells: int) -> "BatteryModel":
        from dataclasses import replace
        return replace(self, n_cells=n_cells)

    def with_cutoff(self, v_cutoff: float) -> "BatteryModel":
        from dataclasses import replace
        return replace(self, v_cutoff=v_cutoff)

    @property
    def pack_mass(self) -> float:
        return self.n_cells * self.cell_mass


@dataclass(frozen=True)
class FlightTimeResult:
    duration: float  # s
    steps: int
    terminated_by: str  # "energy_exhausted" | "cutoff_voltage" | "current_limit"
    energy_used: float  # Wh per cell
    dt: float
    currents: np.ndarray = field(repr=False, default=None)
    voltages: np.ndarray = field(repr=False, default=None)

    @property
    def truncated(self) -> bool:
        return self.terminated_by == "current_limit"

    @property
    def minutes(self) -> float:
        return self.duration / 60.0


def _r2(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def _polyfit(x, y, degree):
    A = np.vander(x, degree + 1)
    if np.linalg.matrix_rank(A) < degree + 1:
        raise FitError(f"singular design matrix for degree-{degree} fit")
    coeffs, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coeffs


def fit_rational(current, energy, q_grid: int = 400) -> RationalFit:
    """Fit (p1 I + p2)/(I + q1): coarse grid over q1, linear least squares for p1, p2."""
    x = np.asarray(current, dtype=float)
    y = np.asarray(energy, dtype=float)
    q_lo = -0.95 * x.min()

    def solve(q):
        A = np.column_stack([x / (x + q), 1.0 / (x + q)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return coef, float(np.sum((A @ coef - y) ** 2))

    grid = np.concatenate([q_lo + np.geomspace(1e-3, 1.0, q_grid // 4) * (x.min() - q_lo),
                           np.geomspace(x.min() * 1.001, 1e4, q_grid)])
    sse = [solve(q)[1] for q in grid]
    i = int(np.argmin(sse))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda q: solve(q)[1], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        q = res.x if res.fun <= sse[i] else grid[i]
    else:
        q = grid[i]
    (p1, p2), _ = solve(q)
    return RationalFit(float(p1), float(p2), float(q))


def fit_battery(points: Sequence[DischargeCurvePoint], n_cells: int = 17, cell_mass: float = 0.05,
                v_cutoff: float = 3.2, v_rated: float = 3.67, **kw) -> BatteryModel:
    currents = np.array([p.current for p in points], dtype=float)
    if len(np.unique(currents)) < 3:
        raise FitError("need at least three distinct discharge currents")
    vmax = np.array([p.v_max for p in points])
    vmin = np.array([p.v_min for p in points])
    emax = np.array([p.e_max for p in points])

    c_vmax = _polyfit(currents, vmax, 1)
    c_vmin = _polyfit(currents, vmin, 2)
    e_fit = fit_rational(currents, emax)
    if np.any(e_fit(currents) <= 0):
        raise FitError("energy regression is non-positive over the fitted range")
    r2 = (_r2(vmax, np.polyval(c_vmax, currents)),
          _r2(vmin, np.polyval(c_vmin, currents)),
          _r2(emax, e_fit(currents)))
    return BatteryModel(tuple(float(c) for c in c_vmax), tuple(float(c) for c in c_vmin), e_fit,
                        n_cells=n_cells, cell_mass=cell_mass, v_cutoff=v_cutoff, v_rated=v_rated,
                        fit_r2=r2, current_range=(float(currents.min()), float(currents.max())), **kw)


def read_datasheet(path) -> list[DischargeCurvePoint]:
    """Rows of ``current_A,v_max_V,v_min_V,e_max_Wh``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    return [DischargeCurvePoint(float(r["current_A"]), float(r["v_max_V"]),
                                float(r["v_min_V"]), float(r["e_max_Wh"])) for r in rows]


def write_datasheet(path, points: Iterable[DischargeCurvePoint]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["current_A", "v_max_V", "v_min_V", "e_max_Wh"])
        for p in points:
            w.writerow([p.current, p.v_max, p.v_min, p.e_max])


def default_datasheet_path() -> Path:
    return Path(str(resources.files("pap_planner") / "data" / "li_ion_18650_3200mAh.csv"))


def default_battery(**kw) -> BatteryModel:
    return fit_battery(read_datasheet(default_datasheet_path()), **kw)


def slope(model: BatteryModel, current: float) -> float:
    """Voltage drop per Wh drawn from one cell at the given cell current."""
    lo, hi = model.current_range
    m = model.extrapolation_margin
    if not (lo - m <= current <= hi + m) or current < 0:
        raise ValueError(f"current {current:.3f} A outside fitted range [{lo}, {hi}] +/- {m}")
    return float((model.f_vmax(current) - model.f_vmin(current)) / model.f_e(current))


def _initial_state(model: BatteryModel, p_uav: float):
    i = p_uav / (model.v_rated * model.n_cells)
    if i > model.max_cell_current:
        return model.v_rated, i  # over the limit already; avoid evaluating the fit far outside its range
    v = float(model.f_vmax(i))
    i = p_uav / (v * model.n_cells)
    v = float(model.f_vmax(i))
    return v, p_uav / (v * model.n_cells)


def flight_time(model: BatteryModel, p_uav: float, dt: float = 1.0, slope_fn=None,
                record: bool = False, max_steps: int = 10_000_000) -> FlightTimeResult:
    """Step-wise terminal-voltage simulation at constant pack power ``p_uav`` (W)."""
    if p_uav <= 0 or dt <= 0:
        raise ValueError("p_uav and dt must be positive")
    k_of = slope_fn if slope_fn is not None else (lambda i: slope(model, i))
    n = model.n_cells
    v, i = _initial_state(model, p_uav)
    e_step = i * v * dt / 3600.0  # Wh per cell
    e_tot = e_step
    e_max = float(model.f_e(i))
    j = 1
    currents, voltages = ([i], [v]) if record else (None, None)
    reason = "energy_exhausted"
    if i > model.max_cell_current:
        reason = "current_limit"
    else:
        while e_tot < e_max and j < max_steps:
            v_next = v - k_of(i) * e_step
            if v_next < model.v_cutoff:
                reason = "cutoff_voltage"
                break
            j += 1
            v = v_next
            i = p_uav / (v * n)
            if i > model.max_cell_current:
                reason = "current_limit"
                break
            e_step = i * v * dt / 3600.0
            e_tot += e_step
            e_max = float(model.f_e(i))
            if record:
                currents.append(i)
                voltages.append(v)
    return FlightTimeResult(j * dt, j, reason, e_tot, dt,
                            np.array(currents) if record else None,
                            np.array(voltages) if record else None)


def naive_flight_time(model: BatteryModel, p_uav: float) -> float:
    """Pack capacity at the initial current divided by power, in seconds."""
    _, i = _initial_state(model, p_uav)
    return float(model.f_e(i)) * model.n_cells * 3600.0 / p_uav


def hover_time(model: BatteryModel, body_mass: float, uav: UavParams, dt: float = 1.0) -> FlightTimeResult:
    weight = (body_mass + model.pack_mass) * GRAVITY
    return flight_time(model, hover_power(uav.with_weight(weight)), dt)


@dataclass(frozen=True)
class SizingPoint:
    n_cells: int
    total_mass: float
    hover_minutes: float
    constrained: bool  # True when total mass exceeds the take-off limit
    truncated: bool


def sizing_sweep(model: BatteryModel, body_mass: float, n_range: Iterable[int], max_takeoff: float,
                 uav: UavParams | None = None, dt: float = 1.0) -> list[SizingPoint]:
    n_range = list(n_range)
    if not n_range:
        raise ValueError("n_range must be non-empty")
    if any(n < 1 for n in n_range):
        raise ValueError("a battery needs at least one cell")
    uav = uav or UavParams()
    out = []
    for n in n_range:
        m = model.with_cells(n)
        res = hover_time(m, body_mass, uav, dt)
        mass = body_mass + m.pack_mass
        out.append(SizingPoint(n, mass, res.minutes, mass > max_takeoff + 1e-12, res.truncated))
    return out
