import pytest
from hypothesis import given, strategies as st

from gridflex.catalog import builtin_catalog, lookup
from gridflex.storage import (
    apply_soc, ramp_down_energy, soc_power_limits, viable_power_limits,
)

STORAGE = [s for s in builtin_catalog() if s.is_storage]


def test_discharge_divides_by_efficiency():
    assert apply_soc(200.0, 100.0, 60, lookup("Battery")) == pytest.approx(200 - 100 / 0.97)
    assert apply_soc(200.0, 100.0, 60, lookup("Battery")) == pytest.approx(96.907, abs=1e-3)


def test_charge_multiplies_by_efficiency():
    assert apply_soc(200.0, -100.0, 60, lookup("Battery")) == pytest.approx(290.0)


def test_idle_keeps_soc():
    assert apply_soc(123.0, 0.0, 15, lookup("Battery")) == 123.0


def test_limits_at_empty_and_full():
    b = lookup("Battery")
    assert soc_power_limits(0.0, b, 1)[1] == 0.0
    assert soc_power_limits(b.energy_cap, b, 1)[0] == 0.0


def test_limit_for_nearly_empty_battery():
    b = lookup("Battery")
    p_hi = soc_power_limits(0.5, b, 1)[1]
    assert p_hi == pytest.approx(29.1)
    assert apply_soc(0.5, p_hi, 1, b) >= -1e-12


def test_non_storage_rejected():
    with pytest.raises(ValueError):
        apply_soc(0.0, 1.0, 1, lookup("ICE"))
    with pytest.raises(ValueError):
        soc_power_limits(0.0, lookup("HVAC"), 1)


@given(st.sampled_from(STORAGE), st.floats(0, 1), st.floats(-1, 1),
       st.sampled_from([1, 5, 15, 60]))
def test_limits_keep_soc_in_range(spec, frac, share, dt):
    soc = frac * spec.energy_cap
    lo, hi = soc_power_limits(soc, spec, dt)
    assert lo <= 0.0 <= hi
    assert -spec.p_max <= lo and hi <= spec.p_max
    p = hi * share if share > 0 else -lo * share
    after = apply_soc(soc, p, dt, spec)
    tol = 1e-9 * spec.energy_cap
    assert -tol <= after <= spec.energy_cap + tol


@given(st.sampled_from(STORAGE), st.floats(0, 1), st.floats(0, 1))
def test_round_trip_loses_energy(spec, frac, share):
    soc = frac * spec.energy_cap
    p = share * spec.p_max
    back = apply_soc(apply_soc(soc, -p, 60, spec), p, 60, spec)
    assert back <= soc + 1e-9 * spec.energy_cap


def test_ramp_down_energy_for_fast_store_is_zero():
    b = lookup("Battery")
    assert ramp_down_energy(100.0, b, 1) == 0.0


def test_ramp_down_energy_counts_intermediate_steps():
    phs = lookup("Pumped Hydro")
    # 400 MW: phi 300, then 250, 200, 150, 100, 50 before idle: six steps
    expected = sum(100 + x for x in (250, 200, 150, 100, 50)) / 60.0
    assert ramp_down_energy(400.0, phs, 1) == pytest.approx(expected)


@given(st.sampled_from(STORAGE), st.floats(0, 1), st.sampled_from([1, 5, 15]))
def test_viable_limits_are_tighter_and_leave_room_to_stop(spec, frac, dt):
    soc = frac * spec.energy_cap
    lo, hi = viable_power_limits(soc, spec, dt)
    raw_lo, raw_hi = soc_power_limits(soc, spec, dt)
    assert raw_lo <= lo <= 0.0 <= hi <= raw_hi
    # walk the fastest ramp-down from the discharge limit and stay non-negative
    p, s = hi, soc
    step = dt * spec.ramp
    while True:
        s = apply_soc(s, p, dt, spec)
        assert s >= -1e-9 * spec.energy_cap
        phi = abs(p) - spec.p_min
        if phi <= step or p == 0:
            break
        p = spec.p_min + phi - step
