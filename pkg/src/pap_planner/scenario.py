"""Scenario description, YAML round-trip, and the derived world (path, IRSs, rate tables)."""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .battery import BatteryModel, fit_battery, read_datasheet, default_datasheet_path
from .channel import ChannelParams
from .coverage import CoverSet, FlightPath, build_path, multi_tier_pack, place_irs, select_lois
from .irs import FOUR_PHASES, AmpPhaseParams, BeamformingResult, LinkTables, beamform_tables, build_link_tables
from .power import GRAVITY, UavParams, hover_equivalent_velocity


@dataclass
class BatteryConfig:
    datasheet: str | None = None  # None: the shipped sample
    n_cells: int = 17
    cell_mass: float = 0.05  # kg
    body_mass: float = 2.0  # kg
    v_cutoff: float = 3.2
    v_rated: float = 3.67
    max_takeoff: float = 3.6  # kg
    dt: float = 1.0
    max_cell_current: float = 10.0


@dataclass
class IrsConfig:
    amp: AmpPhaseParams = field(default_factory=AmpPhaseParams)
    phase_set: list = field(default_factory=lambda: list(FOUR_PHASES))
    placement: str = "per_loi"  # or "none"
    n_elements: int = 178  # quarter-wavelength elements, about 0.25 m^2 at 2 GHz
    elem_dx: float = 0.0375
    elem_dz: float = 0.0375
    offset: float = 20.0
    height: float = 10.0
    amplitude_aware: bool = True


@dataclass
class PlannerConfig:
    velocities: list = field(default_factory=lambda: list(range(1, 26)))
    delta: float = 1.0
    r_small: float = 20.0
    v_max: float = 20.0
    early_break: bool = False
    force_nlos_direct: bool = False


@dataclass
class Scenario:
    gn_positions: list = field(default_factory=list)  # empty: draw n_gns uniformly with seed
    n_gns: int = 6
    area_radius: float = 60.0
    q_bits: float = 1e9
    p_I: list = field(default_factory=lambda: [0.0, 0.0, 100.0])
    p_F: list = field(default_factory=lambda: [0.0, 0.0, 100.0])
    seed: int = 3
    uav: UavParams = field(default_factory=UavParams)
    battery: BatteryConfig = field(default_factory=BatteryConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    irs: IrsConfig = field(default_factory=IrsConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)

    def __post_init__(self):
        if self.q_bits <= 0:
            raise ValueError("q_bits must be positive")
        if self.planner.delta >= self.uav.altitude:
            raise ValueError("path discretisation must be much finer than the altitude")
        for g in self.gn_positions:
            if math.hypot(g[0], g[1]) > self.area_radius * (1 + 1e-9):
                raise ValueError("GN outside the area")

    # -- io ------------------------------------------------------------------
    def to_dict(self) -> dict:
        d = asdict(self)
        d["irs"]["phase_set"] = [float(x) for x in self.irs.phase_set]
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> "Scenario":
        d = dict(d or {})
        nested = {"uav": UavParams, "battery": BatteryConfig, "channel": ChannelParams, "irs": IrsConfig,
                  "planner": PlannerConfig}
        if isinstance(d.get("irs"), dict) and "amp" in d["irs"]:
            d["irs"] = {**d["irs"], "amp": _build(AmpPhaseParams, d["irs"]["amp"])}
        for key, typ in nested.items():
            if key in d:
                d[key] = _build(typ, d[key])
        return _build(cls, d)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        return cls.from_dict(yaml.safe_load(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.loads(Path(path).read_text())

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"scenario_sha256": self.digest(), "version": __version__, "seed": self.seed}

    # -- derived quantities --------------------------------------------------
    @property
    def h_p(self) -> float:
        return self.uav.altitude

    def gns(self) -> np.ndarray:
        if self.gn_positions:
            g = np.asarray(self.gn_positions, dtype=float)
            return np.c_[g[:, :2], np.zeros(len(g))]
        return uniform_disc_points(self.n_gns, self.area_radius, self.seed)

    def battery_model(self) -> BatteryModel:
        b = self.battery
        path = b.datasheet or default_datasheet_path()
        return fit_battery(read_datasheet(path), n_cells=b.n_cells, cell_mass=b.cell_mass,
                           v_cutoff=b.v_cutoff, v_rated=b.v_rated, max_cell_current=b.max_cell_current)

    def flight_uav(self) -> UavParams:
        """Airframe with its weight set by body plus battery pack."""
        b = self.battery
        return self.uav.with_weight((b.body_mass + b.n_cells * b.cell_mass) * GRAVITY)

    def v_max(self) -> float:
        return min(self.planner.v_max, hover_equivalent_velocity(self.flight_uav()))


def _build(cls, values: dict):
    """Dataclass from a mapping; unknown keys raise, scalars are cast to the default's type.

    YAML 1.1 reads '1.0e8' as a string, so numeric defaults force a float/int cast.
    """
    values = dict(values or {})
    names = {f.name: f for f in fields(cls)}
    unknown = set(values) - set(names)
    if unknown:
        raise ValueError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    for key, val in values.items():
        default = names[key].default
        if isinstance(default, bool) or default is None:
            continue
        if isinstance(default, (int, float)) and not isinstance(val, bool):
            num = float(val)
            if isinstance(default, int):
                if num != int(num):
                    raise ValueError(f"{cls.__name__}.{key} must be an integer")
                num = int(num)
            values[key] = num
    return cls(**values)


def uniform_disc_points(n: int, radius: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.random(n))
    th = 2 * np.pi * rng.random(n)
    return np.c_[r * np.cos(th), r * np.sin(th), np.zeros(n)]


@dataclass
class World:
    """Phase-one products: packing, LoIs, path, IRSs and beamformed rates."""

    scenario: Scenario
    gns: np.ndarray
    cover: CoverSet
    lois: np.ndarray  # (n_loi, 2) in visiting order
    path: FlightPath
    irss: list
    tables: LinkTables
    beam: BeamformingResult
    hover_beam: BeamformingResult  # rates while hovering above each LoI

    @property
    def rates(self) -> np.ndarray:
        return self.beam.rates

    @property
    def seg_lengths(self) -> np.ndarray:
        return self.path.segment_lengths

    @property
    def loi_segments(self) -> list:
        """Index of the segment that ends at each visited LoI."""
        return [w - 1 for w in self.path.loi_waypoint_index]


def layout(sc: Scenario):
    """GNs, cover, LoIs in visiting order, discretised path and IRS placements."""
    gns = sc.gns()
    cover = multi_tier_pack(sc.area_radius, sc.planner.r_small)
    idx = select_lois(cover, gns[:, :2], sc.planner.r_small)
    lois_all = cover.circle_centers[idx]
    path = build_path(lois_all, sc.p_I, sc.p_F, sc.planner.delta, sc.h_p)
    lois = lois_all[list(path.loi_indices)]
    irss = []
    if sc.irs.placement == "per_loi":
        irss = place_irs(lois, gns, sc.irs.n_elements, sc.irs.elem_dx, sc.irs.elem_dz,
                         sc.planner.r_small, sc.irs.offset, sc.irs.height)
    elif sc.irs.placement != "none":
        raise ValueError(f"unknown IRS placement rule {sc.irs.placement!r}")
    return gns, cover, lois, path, irss


def build_world(sc: Scenario, irss: list | None = None) -> World:
    gns, cover, lois, path, placed = layout(sc)
    irss = placed if irss is None else irss
    tables = build_link_tables(path.midpoints, gns, irss, sc.channel, sc.h_p, sc.planner.force_nlos_direct)
    beam = beamform_tables(tables, sc.channel, sc.irs.phase_set, sc.irs.amp, sc.irs.amplitude_aware)
    loi3 = np.c_[lois, np.full(len(lois), sc.h_p)]
    hover_tables = build_link_tables(loi3, gns, irss, sc.channel, sc.h_p, sc.planner.force_nlos_direct)
    hover_beam = beamform_tables(hover_tables, sc.channel, sc.irs.phase_set, sc.irs.amp, sc.irs.amplitude_aware)
    return World(sc, gns, cover, lois, path, irss, tables, beam, hover_beam)
