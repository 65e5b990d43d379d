"""Rotary-wing propulsion power for horizontal flight at constant velocity."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

GRAVITY = 9.81

_RHO_SLOPE = 2.2558e-5
_RHO_EXP = 4.2577


@dataclass(frozen=True)
class UavParams:
    weight_total: float = 24.5  # N, body + battery
    n_rotors: int = 4
    v_tip: float = 102.0
    fuselage_area: float = 0.038
    drag_coeff: float = 0.9
    rotor_disc_area: float = 0.06
    profile_drag_coeff: float = 0.002
    rotor_solidity: float = 0.05
    altitude: float = 100.0

    def __post_init__(self):
        for name in ("weight_total", "n_rotors", "v_tip", "fuselage_area", "drag_coeff",
                     "rotor_disc_area", "profile_drag_coeff", "rotor_solidity", "altitude"):
            if not getattr(self, name) > 0:
                raise ValueError(f"UavParams.{name} must be strictly positive")

    def with_weight(self, weight: float) -> "UavParams":
        return replace(self, weight_total=weight)


@dataclass(frozen=True)
class PowerBreakdown:
    blade: float
    fuselage: float
    induced: float

    @property
    def total(self) -> float:
        return self.blade + self.fuselage + self.induced


def air_density(altitude: float) -> float:
    """Relative air density (sea level = 1) at ``altitude`` metres."""
    if not 0.0 <= altitude < 1.0 / _RHO_SLOPE:
        raise ValueError(f"altitude {altitude} m outside the density model range")
    return (1.0 - _RHO_SLOPE * altitude) ** _RHO_EXP


@dataclass(frozen=True)
class PowerConstants:
    """Constants of the segment-energy form E(T) = C1(T + 3d^2/(T vtip^2)) + C2 d^3/T^2 + C3 z."""

    c1: float
    c2: float
    c3: float
    c4: float
    v_tip: float


def power_constants(params: UavParams) -> PowerConstants:
    rho = air_density(params.altitude)
    blade_single = (params.profile_drag_coeff / 8.0) * rho * params.rotor_solidity \
        * params.rotor_disc_area * params.v_tip ** 3
    w = params.weight_total
    return PowerConstants(
        c1=params.n_rotors * blade_single,
        c2=0.5 * params.drag_coeff * params.fuselage_area * rho,
        c3=w,
        c4=w ** 2 / (4.0 * params.n_rotors ** 2 * rho ** 2 * params.rotor_disc_area ** 2),
        v_tip=params.v_tip,
    )


def propulsion_power(params: UavParams, v: float) -> PowerBreakdown:
    if v < 0:
        raise ValueError("velocity must be non-negative")
    k = power_constants(params)
    blade = k.c1 * (1.0 + 3.0 * v ** 2 / k.v_tip ** 2)
    fuselage = k.c2 * v ** 3
    # sqrt(c4 + v^4/4) - v^2/2 rewritten to avoid cancellation at high speed
    inner = k.c4 / (math.sqrt(k.c4 + v ** 4 / 4.0) + v ** 2 / 2.0)
    induced = k.c3 * math.sqrt(inner)
    return PowerBreakdown(blade, fuselage, induced)


def total_power(params: UavParams, v) -> np.ndarray:
    """Vectorised total propulsion power over an array of velocities."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("velocity must be non-negative")
    k = power_constants(params)
    inner = k.c4 / (np.sqrt(k.c4 + v ** 4 / 4.0) + v ** 2 / 2.0)
    return k.c1 * (1.0 + 3.0 * v ** 2 / k.v_tip ** 2) + k.c2 * v ** 3 + k.c3 * np.sqrt(inner)


def hover_power(params: UavParams) -> float:
    return propulsion_power(params, 0.0).total


def segment_energy(params: UavParams, seg_len, t):
    """Energy (J) to cover ``seg_len`` metres in ``t`` seconds at constant speed."""
    seg_len = np.asarray(seg_len, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("segment time must be positive")
    if np.any(seg_len < 0):
        raise ValueError("segment length must be non-negative")
    e = t * total_power(params, seg_len / t)
    return e if e.ndim else float(e)


def induced_slack(params: UavParams, seg_len, t):
    """Exact slack z with z^2 = sqrt(C4 T^4 + d^4/4) - d^2/2, so that C3*z is the induced energy."""
    k = power_constants(params)
    seg_len = np.asarray(seg_len, dtype=float)
    t = np.asarray(t, dtype=float)
    z2 = k.c4 * t ** 4 / (np.sqrt(k.c4 * t ** 4 + seg_len ** 4 / 4.0) + seg_len ** 2 / 2.0)
    return np.sqrt(z2)


def min_power_velocity(params: UavParams, v_grid=None) -> float:
    if v_grid is None:
        v_grid = np.arange(0.0, 25.0 + 1e-9, 0.5)
    p = total_power(params, v_grid)
    return float(np.asarray(v_grid)[int(np.argmin(p))])


def hover_equivalent_velocity(params: UavParams, v_hi: float = 60.0) -> float:
    """Largest speed whose propulsion power does not exceed hover power."""
    from scipy.optimize import brentq

    p0 = hover_power(params)
    v_star = min_power_velocity(params, np.linspace(0.0, v_hi, 2401))
    f = lambda v: propulsion_power(params, v).total - p0
    if f(v_hi) <= 0:
        return v_hi
    return brentq(f, max(v_star, 1e-6), v_hi, xtol=1e-10)
