import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _oracles import maxmin_dual_grid
from pap_planner.planner import (RateTable, e2p2, maxmin_schedule, plan_for_velocity, replay_profile)
from pap_planner.power import UavParams, total_power


def test_schedule_examples():
    s = maxmin_schedule(np.array([[10.0, 10.0]]), 1.0)
    assert s.t_star == pytest.approx(5.0)
    assert s.t_mn == pytest.approx(np.array([[0.5, 0.5]]))
    d = np.array([[3.0], [5.0], [0.0]])
    assert maxmin_schedule(d, [1.0, 2.0, 4.0]).t_star == pytest.approx(13.0)
    bad = maxmin_schedule(np.array([[1.0, 0.0], [2.0, 0.0]]), 1.0)
    assert not bad.feasible and bad.t_star == 0.0


def test_rate_table_validation():
    with pytest.raises(ValueError):
        RateTable(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        RateTable(np.array([[1.0, -2.0]]))
    with pytest.raises(ValueError):
        maxmin_schedule(np.ones((2, 2)), 0.0)


@pytest.mark.parametrize("seed", range(20))
def test_schedule_matches_dual_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    M, N = (int(x) for x in rng.integers(1, 4, 2))
    d = rng.uniform(0.0, 10.0, (M, N))
    d[0] += 0.1
    t_m = rng.uniform(0.5, 2.0, M)
    assert maxmin_schedule(d, t_m).t_star == pytest.approx(maxmin_dual_grid(d, t_m), rel=1e-3)


@given(st.integers(0, 10_000), st.floats(1e-3, 1e6))
def test_schedule_scale_covariant_and_feasible(seed, c):
    rng = np.random.default_rng(seed)
    d = rng.uniform(0.0, 5.0, (6, 3))
    d[0] += 0.1
    t_m = rng.uniform(0.2, 1.0, 6)
    a = maxmin_schedule(d, t_m)
    b = maxmin_schedule(c * d, t_m)
    assert b.t_star == pytest.approx(c * a.t_star, rel=1e-7)
    assert (a.t_mn * c * d).sum(axis=0).min() == pytest.approx(b.t_star, rel=1e-7)
    for s in (a, b):
        assert np.all(s.t_mn >= 0)
        assert np.all(s.t_mn.sum(axis=1) <= t_m + 1e-9)


def _toy(n_seg=20, n_gn=2, rate=5e6, seed=0):
    rng = np.random.default_rng(seed)
    return RateTable(rate * rng.uniform(0.5, 1.5, (n_seg, n_gn))), np.full(n_seg, 1.0)


def test_plan_lap_count_and_invariants(battery):
    uav = UavParams()
    rates, seg = _toy()
    small = plan_for_velocity(rates, seg, 1e3, 10.0, uav, battery)
    assert small.feasible and small.n_lap == 1
    p = plan_for_velocity(rates, seg, 2e7, 10.0, uav, battery)
    t_star = maxmin_schedule(rates, seg / 10.0).t_star
    assert p.n_lap == math.ceil(2e7 / t_star)
    assert np.all(p.bits_per_gn >= 2e7 * (1 - 1e-9))
    assert np.all(p.t_mn.sum(axis=1) <= p.t_m + 1e-9)
    assert (p.n_lap + 1) * p.lap_time <= p.t_max
    assert p.energy_total == pytest.approx(p.n_lap * p.lap_time * float(total_power(uav, 10.0)))
    assert p.gee == pytest.approx(p.recomputed_gee(), rel=1e-12)
    p2 = plan_for_velocity(rates, seg, 4e7, 10.0, uav, battery)
    assert p2.n_lap <= 2 * p.n_lap


def test_plan_infeasible_cases(battery):
    uav = UavParams()
    rates, seg = _toy(rate=1e3)
    p = plan_for_velocity(rates, seg, 1e12, 10.0, uav, battery)
    assert not p.feasible and p.reason == "battery limit"
    z = RateTable(np.zeros((4, 2)))
    assert not plan_for_velocity(z, np.ones(4), 1e6, 5.0, uav, battery).feasible
    res = e2p2(rates, seg, 1e12, uav, battery, velocities=[5, 10])
    assert not res.found and len(res.per_velocity) == 2


def test_huge_rate_picks_max_range_velocity(battery):
    """With one lap always enough, GEE is Q v / (L P(v)); the argmax minimises P(v)/v."""
    uav = UavParams()
    rates = RateTable(np.full((50, 1), 1e12))
    seg = np.ones(50)
    vs = list(range(1, 26))
    res = e2p2(rates, seg, 1e6, uav, battery, vs)
    oracle = min(vs, key=lambda v: float(total_power(uav, v)) / v)
    assert res.best.n_lap == 1
    assert res.best.velocity == oracle


def test_early_break_stops_and_is_consistent(battery):
    uav = UavParams()
    rates, seg = _toy()
    full = e2p2(rates, seg, 2e7, uav, battery)
    early = e2p2(rates, seg, 2e7, uav, battery, early_break=True)
    assert len(early.per_velocity) <= len(full.per_velocity)
    assert early.best.gee <= full.best.gee
    assert full.best.gee == max(p.gee for p in full.per_velocity if p.feasible)


@given(st.integers(0, 10_000))
def test_lower_rates_never_increase_gee(seed):
    from pap_planner.battery import default_battery
    battery = default_battery()
    rng = np.random.default_rng(seed)
    d = rng.uniform(1e6, 1e7, (20, 2))
    lower = d * rng.uniform(0.2, 1.0, d.shape)
    a = e2p2(RateTable(d), np.ones(20), 5e7, UavParams(), battery, [4, 8, 12, 16])
    b = e2p2(RateTable(lower), np.ones(20), 5e7, UavParams(), battery, [4, 8, 12, 16])
    if b.found:
        assert a.found and a.best.gee >= b.best.gee


def test_deterministic(battery, tmp_path):
    rates, seg = _toy()
    a = e2p2(rates, seg, 2e7, UavParams(), battery)
    b = e2p2(rates, seg, 2e7, UavParams(), battery)
    a.best.write(tmp_path / "a.json", tmp_path / "a.csv")
    b.best.write(tmp_path / "b.json", tmp_path / "b.csv")
    assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
    js = json.loads((tmp_path / "a.json").read_text())
    assert js["n_lap"] == a.best.n_lap


def test_replay_confirms_plan(battery):
    rates, seg = _toy(rate=2e5)
    plan = e2p2(rates, seg, 5e7, UavParams(), battery).best
    assert plan.n_lap > 1
    rep = replay_profile(battery, [plan.power], [plan.mission_time])
    assert rep.completed and rep.min_voltage >= battery.v_cutoff
    too_long = replay_profile(battery, [plan.power], [plan.t_max * 1.2])
    assert not too_long.completed
