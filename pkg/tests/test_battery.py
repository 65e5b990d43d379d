import numpy as np
import pytest
from hypothesis import given, strategies as st

from pap_planner.battery import (BatteryModel, DischargeCurvePoint, FitError, RationalFit, fit_battery,
                                 fit_rational, flight_time, hover_time, naive_flight_time, read_datasheet,
                                 sizing_sweep, slope, write_datasheet, default_datasheet_path)
from pap_planner.power import GRAVITY, UavParams, hover_power, total_power


def _flat_model(e_max=10.0, n_cells=16, v=4.0, **kw):
    return BatteryModel((0.0, v), (0.0, 0.0, v - 1.0), RationalFit(e_max, 0.0, 0.0), n_cells=n_cells,
                        current_range=(0.1, 10.0), **kw)


def test_exact_linear_recovery():
    cur = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    pts = [DischargeCurvePoint(i, 4.2 - 0.05 * i, 3.3 - 0.01 * i - 0.002 * i * i, 9.0 * (i + 3) / (i + 2.5))
           for i in cur]
    m = fit_battery(pts)
    assert m.vmax_coeffs == pytest.approx((-0.05, 4.2), abs=1e-9)
    assert m.vmin_coeffs == pytest.approx((-0.002, -0.01, 3.3), abs=1e-9)
    assert m.fit_r2[0] == pytest.approx(1.0, abs=1e-12)
    assert m.fit_r2[1] == pytest.approx(1.0, abs=1e-12)
    assert m.f_e(cur) == pytest.approx(9.0 * (cur + 3) / (cur + 2.5), rel=1e-5)


def test_rational_fit_constant_data():
    cur = np.array([0.5, 1.0, 2.0, 5.0])
    fit = fit_rational(cur, np.full(4, 7.5))
    assert fit(np.linspace(0.5, 5, 20)) == pytest.approx(7.5, abs=1e-8)


def test_shipped_datasheet_fits_well(battery):
    assert min(battery.fit_r2) > 0.98
    assert len(read_datasheet(default_datasheet_path())) >= 5


def test_fit_errors():
    p = [DischargeCurvePoint(1.0, 4.0, 3.0, 8.0), DischargeCurvePoint(2.0, 3.9, 2.9, 7.0)]
    with pytest.raises(FitError):
        fit_battery(p)
    with pytest.raises(FitError):
        fit_battery(p + [DischargeCurvePoint(2.0, 3.8, 2.8, 6.5)])
    with pytest.raises(ValueError):
        DischargeCurvePoint(1.0, 3.0, 3.5, 8.0)


def test_datasheet_roundtrip(tmp_path):
    pts = read_datasheet(default_datasheet_path())
    write_datasheet(tmp_path / "d.csv", pts)
    assert read_datasheet(tmp_path / "d.csv") == pts


def test_slope_arithmetic_and_domain():
    m = BatteryModel((0.0, 4.1), (0.0, 0.0, 3.2), RationalFit(9.0, 0.0, 0.0), current_range=(1.0, 5.0))
    assert slope(m, 2.0) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        slope(m, 7.5)


def test_slope_positive_and_continuous(battery):
    lo, hi = battery.current_range
    i = np.linspace(lo, hi, 2001)
    k = np.array([slope(battery, x) for x in i])
    assert np.all(k > 0)
    assert np.max(np.abs(np.diff(k))) < 1e-3


def test_naive_arithmetic():
    assert naive_flight_time(_flat_model(), 160.0) == pytest.approx(3600.0)


def test_zero_slope_matches_naive():
    m = _flat_model(v_cutoff=0.0)
    res = flight_time(m, 160.0, dt=1.0, slope_fn=lambda i: 0.0)
    assert abs(res.duration - naive_flight_time(m, 160.0)) <= 1.0
    assert res.terminated_by == "energy_exhausted"


def test_hover_endurance_near_25_minutes(battery):
    res = hover_time(battery.with_cells(17), 2.0, UavParams())
    assert abs(res.minutes - 25) <= 3


def test_below_naive_over_velocity_sweep(battery):
    uav = UavParams().with_weight((2.0 + 17 * 0.05) * GRAVITY)
    for v in np.arange(0, 25.01, 0.5):
        p = float(total_power(uav, v))
        assert flight_time(battery, p).duration < naive_flight_time(battery, p)


def test_cutoff_shortens(battery):
    p = hover_power(UavParams())
    assert flight_time(battery, p).duration <= flight_time(battery.with_cutoff(0.0), p).duration


def test_current_limit_truncates(battery):
    res = flight_time(battery.with_cells(2), 400.0)
    assert res.truncated


def test_sizing_errors_and_constraint(battery):
    with pytest.raises(ValueError):
        sizing_sweep(battery, 2.0, [], 3.6)
    with pytest.raises(ValueError):
        sizing_sweep(battery, 2.0, [0], 3.6)
    pts = sizing_sweep(battery, 2.0, range(1, 41), 3.6)
    assert [p.n_cells for p in pts if not p.constrained][-1] == 32
    assert pts[0].hover_minutes == min(p.hover_minutes for p in pts)


@given(st.floats(60, 600))
def test_current_non_decreasing_and_energy_conserved(p_uav):
    m = fit_battery(read_datasheet(default_datasheet_path()))
    res = flight_time(m, p_uav, record=True)
    assert np.all(np.diff(res.currents) >= -1e-12)
    budget = res.duration * p_uav / m.n_cells / 3600.0
    assert abs(res.energy_used - budget) <= res.dt * p_uav / m.n_cells / 3600.0 + 1e-9


def test_non_increasing_in_power(battery):
    d = [flight_time(battery, p).duration for p in np.linspace(80, 600, 20)]
    assert all(b <= a for a, b in zip(d, d[1:]))


def test_non_increasing_in_cutoff(battery):
    p = 250.0
    d = [flight_time(battery.with_cutoff(v), p).duration for v in np.linspace(0, 3.4, 12)]
    assert all(b <= a for a, b in zip(d, d[1:]))
