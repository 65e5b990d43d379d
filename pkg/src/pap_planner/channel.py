"""Mean path loss, LoS probabilities, antenna gains and complex channel coefficients.

Three links are modelled: PAP to IRS element (3GPP aerial UMa-style), IRS element to
ground node (3GPP UMi street canyon) and PAP to ground node (free space plus a
sigmoid LoS/NLoS excess loss).  All functions broadcast over numpy arrays of
points with a trailing axis of length 3.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SPEED_OF_LIGHT = 3e8
IRS_REFERENCE_HEIGHT = 10.0


@dataclass(frozen=True)
class ChannelParams:
    carrier_freq: float = 2e9  # Hz
    bandwidth_per_gn: float = 20e6  # Hz
    noise_power: float = -101.0  # dBm
    tx_power: float = 23.0  # dBm
    los_a: float = 4.88
    los_b: float = 0.43
    eta_los: float = 0.2  # dB
    eta_nlos: float = 24.0  # dB
    beamwidth_half: float = math.pi / 4  # rad
    sidelobe_gain: float = 0.1

    def __post_init__(self):
        if not self.carrier_freq > 0:
            raise ValueError("carrier frequency must be positive")
        if self.eta_nlos < self.eta_los:
            raise ValueError("eta_nlos must be >= eta_los")
        if not 0 < self.beamwidth_half < math.pi / 2:
            raise ValueError("beamwidth_half must lie in (0, pi/2)")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def tx_power_w(self) -> float:
        return dbm_to_watt(self.tx_power)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watt(self.noise_power)

    @property
    def main_lobe_gain(self) -> float:
        return 2.2846 / self.beamwidth_half ** 2


class PathLoss(NamedTuple):
    mean_db: np.ndarray
    p_los: np.ndarray
    los_db: np.ndarray
    nlos_db: np.ndarray
    valid: np.ndarray  # False where the model is used outside its stated range


@dataclass(frozen=True)
class ComplexGain:
    magnitude: float
    phase: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("magnitude must be non-negative")

    @property
    def value(self) -> complex:
        return self.magnitude * complex(math.cos(self.phase), math.sin(self.phase))

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexGain":
        return cls(abs(z), float(wrap_phase(np.angle(z))))


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def wrap_phase(x):
    """Map angles to [-pi, pi)."""
    x = np.asarray(x, dtype=float)
    w = np.mod(x + np.pi, 2.0 * np.pi) - np.pi
    # absorb round-off so that exact multiples of 2*pi land on 0
    w = np.where(np.abs(w) < 1e-12, 0.0, w)
    return w if w.ndim else float(w)


def _dist(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = a - b
    return np.linalg.norm(diff[..., :2], axis=-1), np.linalg.norm(diff, axis=-1)


def antenna_gain(beamwidth_half, offaxis_az, offaxis_el, sidelobe):
    """Two-plane sectored pattern: main lobe inside |az|, |el| <= beamwidth_half."""
    main = 2.2846 / beamwidth_half ** 2
    inside = (np.abs(offaxis_az) <= beamwidth_half) & (np.abs(offaxis_el) <= beamwidth_half)
    g = np.where(inside, main, sidelobe)
    return g if np.ndim(g) else float(g)


def pap_antenna_gain(p, target, params: ChannelParams):
    """Gain of the nadir-pointing PAP antenna towards ``target``.

    Off-axis angles are measured from the downward boresight in the x-z and y-z planes.
    """
    p = np.asarray(p, dtype=float)
    target = np.asarray(target, dtype=float)
    d = target - p
    depth = np.maximum(-d[..., 2], 1e-9)
    az = np.arctan2(np.abs(d[..., 0]), depth)
    el = np.arctan2(np.abs(d[..., 1]), depth)
    return antenna_gain(params.beamwidth_half, az, el, params.sidelobe_gain)


def pap_irs_los_probability(d2d, h_p):
    log_h = np.log10(h_p)
    p1 = 233.98 * log_h - 0.95
    d1 = max(294.05 * log_h - 432.94, 18.0)
    d2d = np.asarray(d2d, dtype=float)
    safe = np.maximum(d2d, 1e-12)
    far = d1 / safe + np.exp(-safe / p1) * (1.0 - d1 / safe)
    return np.where(d2d <= d1, 1.0, far)


def pap_irs_breakpoint(h_p: float) -> float:
    return max(294.05 * math.log10(h_p) - 432.94, 18.0)


def pap_irs_loss(p, r_elem, h_p: float, f: float) -> PathLoss:
    d2d, d3d = _dist(p, r_elem)
    f_term = 20.0 * math.log10(f / 1e9)
    log_d = np.log10(np.maximum(d3d, 1e-9))
    los = 30.9 + (22.25 - 0.5 * math.log10(h_p)) * log_d + f_term
    nlos = np.maximum(los, 32.4 + (43.2 - 7.6 * math.log10(h_p)) * log_d + f_term)
    pl = pap_irs_los_probability(d2d, h_p)
    valid = np.full(np.shape(d3d), 22.5 < h_p <= 100.0)
    return PathLoss(pl * los + (1 - pl) * nlos, pl, los, nlos, valid)


def irs_gn_los_probability(d2d):
    d2d = np.asarray(d2d, dtype=float)
    safe = np.maximum(d2d, 1e-12)
    far = 18.0 / safe + np.exp(-safe / 36.0) * (1.0 - 18.0 / safe)
    return np.where(d2d <= 18.0, 1.0, far)


def irs_gn_breakpoint(f: float) -> float:
    return 18.0 * f / SPEED_OF_LIGHT


def irs_gn_loss(r_elem, g, f: float) -> PathLoss:
    d2d, d3d = _dist(r_elem, g)
    valid = (d2d >= 10.0) & (d2d <= 5000.0)
    if not np.all(valid):
        warnings.warn("IRS-GN distance outside [10 m, 5 km]; clamping 2D distance", RuntimeWarning,
                      stacklevel=2)
    dz = np.sqrt(np.maximum(d3d ** 2 - d2d ** 2, 0.0))
    d2c = np.clip(d2d, 10.0, 5000.0)
    d3c = np.sqrt(d2c ** 2 + dz ** 2)
    f_ghz = f / 1e9
    f_term = 20.0 * math.log10(f_ghz)
    d_bp = irs_gn_breakpoint(f)
    log_d = np.log10(d3c)
    l_near = 32.4 + 21.0 * log_d + f_term
    l_far = 32.4 + 40.0 * log_d + f_term - 9.5 * math.log10(d_bp ** 2 + 72.25)
    los = np.where(d2c <= d_bp, l_near, l_far)
    nlos = np.maximum(los, 35.3 * log_d + 22.4 + 21.3 * math.log10(f_ghz))
    pl = irs_gn_los_probability(d2c)
    return PathLoss(pl * los + (1 - pl) * nlos, pl, los, nlos, valid)


def elevation_deg(p, g):
    d2d, _ = _dist(p, g)
    dz = np.asarray(p, dtype=float)[..., 2] - np.asarray(g, dtype=float)[..., 2]
    return np.degrees(np.arctan2(dz, d2d))


def pap_gn_los_probability(elev_deg, a: float, b: float):
    return 1.0 / (1.0 + a * np.exp(-b * (np.asarray(elev_deg, dtype=float) - a)))


def free_space_loss(d3d, f: float):
    return 20.0 * np.log10(d3d) + 20.0 * math.log10(f) + 20.0 * math.log10(4 * math.pi / SPEED_OF_LIGHT)


def pap_gn_loss(p, g, f: float, params: ChannelParams, force_nlos: bool = False) -> PathLoss:
    p = np.asarray(p, dtype=float)
    if np.any(p[..., 2] <= 0):
        raise ValueError("PAP must be above ground")
    _, d3d = _dist(p, g)
    if np.any(d3d <= 0):
        raise ValueError("zero PAP-GN distance")
    fspl = free_space_loss(d3d, f)
    los = fspl + params.eta_los
    nlos = fspl + params.eta_nlos
    if force_nlos:
        pl = np.zeros_like(d3d)
    else:
        pl = pap_gn_los_probability(elevation_deg(p, g), params.los_a, params.los_b)
    return PathLoss(pl * los + (1 - pl) * nlos, pl, los, nlos, np.ones_like(d3d, dtype=bool))


def complex_channel(loss_db, gain, d3d, wavelength: float, visible=True):
    """Complex coefficient sqrt(G 10^(-L/10)) exp(-j 2 pi d / lambda), zeroed when not visible."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    mag = np.sqrt(np.asarray(gain, dtype=float) * 10.0 ** (-np.asarray(loss_db, dtype=float) / 10.0))
    mag = mag * np.asarray(visible, dtype=float)
    phase = wrap_phase(-2.0 * np.pi * np.asarray(d3d, dtype=float) / wavelength)
    return mag * np.exp(1j * phase)
