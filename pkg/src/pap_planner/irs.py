"""IRS geometry, coupled amplitude/phase reflection and discrete phase selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import (ChannelParams, complex_channel, irs_gn_loss, pap_antenna_gain, pap_gn_loss,
                      pap_irs_loss, wrap_phase)

FOUR_PHASES = (0.0, math.pi / 2, -math.pi / 2, math.pi)


@dataclass(frozen=True)
class AmpPhaseParams:
    mu_min: float = 0.2
    varrho: float = 0.43 * math.pi
    zeta: float = 1.6

    def __post_init__(self):
        if not (0 <= self.mu_min <= 1 and self.varrho >= 0 and self.zeta >= 0):
            raise ValueError("need 0 <= mu_min <= 1, varrho >= 0, zeta >= 0")


@dataclass(frozen=True)
class IrsModule:
    ref_position: tuple  # centre of element 1, (x, y, z)
    n_elements: int
    elem_dx: float
    elem_dz: float
    normal_azimuth: float  # direction the reflecting face points to, rad

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("an IRS needs at least one element")

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.normal_azimuth), math.sin(self.normal_azimuth)])

    def element_positions(self) -> np.ndarray:
        ref = np.asarray(self.ref_position, dtype=float)
        k = np.arange(self.n_elements)
        pos = np.tile(ref, (self.n_elements, 1))
        pos[:, 2] = ref[2] - k * self.elem_dz
        return pos

    @property
    def area(self) -> float:
        return self.n_elements * self.elem_dx * self.elem_dz


@dataclass(frozen=True)
class ReflectionConfig:
    phases: tuple
    amplitudes: tuple

    @classmethod
    def from_phases(cls, phases, p: AmpPhaseParams) -> "ReflectionConfig":
        phases = wrap_phase(np.asarray(phases, dtype=float))
        return cls(tuple(np.atleast_1d(phases)), tuple(np.atleast_1d(amp_response(phases, p))))

    @property
    def coefficients(self) -> np.ndarray:
        return np.asarray(self.amplitudes) * np.exp(1j * np.asarray(self.phases))


def visible(observer, irs: IrsModule):
    """True where the observer is strictly in front of the reflecting face (XY half-plane)."""
    obs = np.asarray(observer, dtype=float)
    off = obs[..., :2] - np.asarray(irs.ref_position[:2], dtype=float)
    out = off @ irs.normal > 1e-12
    return out if np.ndim(out) else bool(out)


def amp_response(theta, p: AmpPhaseParams):
    base = (np.sin(np.asarray(theta, dtype=float) - p.varrho) + 1.0) / 2.0
    out = (1.0 - p.mu_min) * np.clip(base, 0.0, 1.0) ** p.zeta + p.mu_min
    return out if np.ndim(out) else float(out)


def combined_gain(direct, cascades, configs) -> complex:
    """h_pg + sum_i h_rg_i^H diag(mu e^{j theta}) h_pr_i."""
    total = complex(direct)
    if len(cascades) != len(configs):
        raise ValueError("one reflection config per IRS is required")
    for (h_pr, h_rg), cfg in zip(cascades, configs):
        h_pr = np.asarray(h_pr)
        h_rg = np.asarray(h_rg)
        coeff = cfg.coefficients
        if not (h_pr.shape == h_rg.shape == coeff.shape):
            raise ValueError("cascade and configuration lengths differ")
        total += complex(np.sum(np.conj(h_rg) * coeff * h_pr))
    return total


def received_snr(direct, cascades, configs, tx_power: float, noise: float) -> float:
    return tx_power * abs(combined_gain(direct, cascades, configs)) ** 2 / noise


def rate(snr, bandwidth):
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be non-negative")
    out = bandwidth * np.log2(1.0 + snr)
    return out if np.ndim(out) else float(out)


@dataclass
class AoResult:
    phases: np.ndarray  # (B, L) chosen phases
    amplitudes: np.ndarray  # (B, L) true coupled amplitudes
    gain: np.ndarray  # (B,) combined coefficient with true amplitudes
    predicted_gain: np.ndarray  # (B,) combined coefficient as seen during selection
    sweeps: int
    objective_trace: list = field(default_factory=list)


def _projection_start(a, W, n_dirs):
    """Per-element choice maximising the projection on the best of several directions."""
    B, L, S = W.shape
    best_idx = np.zeros((B, L), dtype=int)
    best_val = np.full(B, -np.inf)
    dirs = [np.angle(a)] + [np.full(B, t) for t in np.linspace(-np.pi, np.pi, n_dirs, endpoint=False)]
    rows = np.arange(B)[:, None]
    cols = np.arange(L)[None, :]
    for phi in dirs:
        proj = np.real(W * np.exp(-1j * phi)[:, None, None])
        idx = np.argmax(proj, axis=2)
        total = np.abs(a + W[rows, cols, idx].sum(axis=1))
        better = total > best_val
        best_val = np.where(better, total, best_val)
        best_idx[better] = idx[better]
    return best_idx


def alternate_optimize_batch(direct, cascade, phase_set: Sequence[float] = FOUR_PHASES,
                             p: AmpPhaseParams = AmpPhaseParams(), amplitude_aware: bool = True,
                             max_sweeps: int = 100, n_dirs: int = 16) -> AoResult:
    """Coordinate ascent over element phases for B independent links.

    ``cascade[b, l]`` is conj(h_rg) * h_pr for element l; zero entries (elements of IRSs
    that are not visible) never influence the result.
    """
    a = np.atleast_1d(np.asarray(direct, dtype=complex))
    C = np.asarray(cascade, dtype=complex)
    if C.ndim == 1:
        C = C[None, :]
    B, L = C.shape
    phases = np.asarray(phase_set, dtype=float)
    if phases.size == 0:
        raise ValueError("phase set must be non-empty")
    mu_true = np.asarray(amp_response(phases, p), dtype=float).reshape(-1)
    mu_sel = mu_true if amplitude_aware else np.ones_like(mu_true)
    unit = np.exp(1j * phases)
    W = C[:, :, None] * (mu_sel * unit)[None, None, :]

    idx = _projection_start(a, W, n_dirs) if L else np.zeros((B, 0), dtype=int)
    rows = np.arange(B)
    total = a + W[rows[:, None], np.arange(L)[None, :], idx].sum(axis=1)
    trace = [np.abs(total) ** 2]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        changed = False
        for l in range(L):
            cur = W[rows, l, idx[:, l]]
            partial = total - cur
            cand = np.abs(partial[:, None] + W[:, l, :]) ** 2
            best = np.argmax(cand, axis=1)
            now = np.abs(total) ** 2
            gain = cand[rows, best]
            upd = gain > now * (1 + 1e-12) + 1e-300
            if np.any(upd):
                changed = True
                idx[upd, l] = best[upd]
                total = np.where(upd, partial + W[rows, l, best], total)
        trace.append(np.abs(total) ** 2)
        if not changed:
            break
    chosen = phases[idx]
    amps = mu_true[idx]
    gain_true = a + np.sum(C * amps * np.exp(1j * chosen), axis=1)
    return AoResult(chosen, amps, gain_true, total, sweeps, trace)


def alternate_optimize(direct, cascades, phase_set=FOUR_PHASES, p: AmpPhaseParams = AmpPhaseParams(),
                       amplitude_aware: bool = True, tx_power: float = 1.0, noise: float = 1.0):
    """Single-link convenience wrapper. Returns (configs, actual snr, ao result)."""
    flat = [np.conj(np.asarray(h_rg)) * np.asarray(h_pr) for h_pr, h_rg in cascades]
    sizes = [len(c) for c in flat]
    C = np.concatenate(flat) if flat else np.zeros(0, dtype=complex)
    res = alternate_optimize_batch(complex(direct), C[None, :], phase_set, p, amplitude_aware)
    configs, start = [], 0
    for n in sizes:
        configs.append(ReflectionConfig.from_phases(res.phases[0, start:start + n], p))
        start += n
    snr = tx_power * abs(res.gain[0]) ** 2 / noise
    return configs, snr, res


def aligned_phases(direct, cascade):
    """Continuous phases that co-phase every cascade term with the direct path."""
    a = np.atleast_1d(np.asarray(direct, dtype=complex))
    C = np.atleast_2d(np.asarray(cascade, dtype=complex))
    ref = np.where(np.abs(a) > 0, np.angle(a), 0.0)
    return wrap_phase(ref[:, None] - np.angle(C))


@dataclass
class LinkTables:
    """Per (segment, GN) coefficients for the direct path and every IRS element cascade."""

    direct: np.ndarray  # (M, N) complex
    cascade: np.ndarray  # (M, N, L) complex, conj(h_rg) * h_pr, zero where not usable
    eligible: np.ndarray  # (M, I, N) bool, b_pr * b_rg


def build_link_tables(positions, gns, irss: Sequence[IrsModule], params: ChannelParams,
                      h_p: float, force_nlos_direct: bool = False) -> LinkTables:
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    gns = np.atleast_2d(np.asarray(gns, dtype=float))
    M, N = len(pos), len(gns)
    lam = params.wavelength
    f = params.carrier_freq

    P = pos[:, None, :]
    G = gns[None, :, :]
    pg = pap_gn_loss(P, G, f, params, force_nlos=force_nlos_direct)
    gain_pg = pap_antenna_gain(P, G, params)
    d_pg = np.linalg.norm(P - G, axis=-1)
    direct = complex_channel(pg.mean_db, gain_pg, d_pg, lam)

    blocks, elig = [], np.zeros((M, len(irss), N), dtype=bool)
    for i, irs in enumerate(irss):
        elems = irs.element_positions()  # (K, 3)
        b_pr = np.asarray(visible(pos, irs))  # (M,)
        b_rg = np.asarray(visible(gns, irs))  # (N,)
        E = elems[None, :, :]
        pr = pap_irs_loss(pos[:, None, :], E, h_p, f)
        g_pr = pap_antenna_gain(pos[:, None, :], E, params)
        d_pr = np.linalg.norm(pos[:, None, :] - E, axis=-1)
        h_pr = complex_channel(pr.mean_db, g_pr, d_pr, lam, b_pr[:, None])  # (M, K)
        rg = irs_gn_loss(elems[:, None, :], gns[None, :, :], f)
        d_rg = np.linalg.norm(elems[:, None, :] - gns[None, :, :], axis=-1)
        h_rg = complex_channel(rg.mean_db, 1.0, d_rg, lam, b_rg[None, :])  # (K, N)
        blocks.append(np.conj(h_rg.T)[None, :, :] * h_pr[:, None, :])  # (M, N, K)
        elig[:, i, :] = b_pr[:, None] & b_rg[None, :]
    cascade = np.concatenate(blocks, axis=2) if blocks else np.zeros((M, N, 0), dtype=complex)
    return LinkTables(direct, cascade, elig)


@dataclass
class BeamformingResult:
    snr: np.ndarray  # (M, N) actual
    predicted_snr: np.ndarray  # (M, N) as believed during selection
    rates: np.ndarray  # (M, N) bits/s
    phases: np.ndarray  # (M, N, L)
    sweeps: int


def beamform_tables(tables: LinkTables, params: ChannelParams, phase_set=FOUR_PHASES,
                    p: AmpPhaseParams = AmpPhaseParams(), amplitude_aware: bool = True) -> BeamformingResult:
    M, N = tables.direct.shape
    L = tables.cascade.shape[2]
    res = alternate_optimize_batch(tables.direct.reshape(-1), tables.cascade.reshape(M * N, L),
                                   phase_set, p, amplitude_aware)
    scale = params.tx_power_w / params.noise_power_w
    snr = scale * np.abs(res.gain.reshape(M, N)) ** 2
    pred = scale * np.abs(res.predicted_gain.reshape(M, N)) ** 2
    return BeamformingResult(snr, pred, rate(snr, params.bandwidth_per_gn),
                             res.phases.reshape(M, N, L), res.sweeps)
