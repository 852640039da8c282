import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridflex.audit import audit_trajectory
from gridflex.catalog import ResourceRole, ResourceSpec, builtin_catalog, lookup
from gridflex.dispatch import DispatchConfig
from gridflex.realtime import (
    DispatchState, feasible_power_set, project, run_realtime, step_dispatch,
)
from gridflex.scenario import NetLoadProfile, builtin_profile


def test_ice_online_window():
    fs = feasible_power_set(lookup("ICE"), DispatchState(0, 10.0, 1, 0), 1)
    assert fs.on_interval == pytest.approx((6.4, 13.6))
    assert not fs.off_allowed


def test_ice_gate_closed():
    fs = feasible_power_set(lookup("ICE"), DispatchState(0, 0.0, 0, 3), 1)
    assert fs.on_interval is None
    assert fs.off_allowed


def test_ice_gate_open_starts_at_minimum():
    # Start-up lands exactly on p_min: the ramp-up inequality with u_prev = 0
    # caps p at p_prev + p_min and the box floors it at p_min.
    fs = feasible_power_set(lookup("ICE"), DispatchState(0, 0.0, 0, 5), 1)
    assert fs.on_interval == (1.8, 1.8)


def test_shutdown_only_from_minimum():
    ice = lookup("ICE")
    assert feasible_power_set(ice, DispatchState(0, 1.8, 1, 0), 1).off_allowed
    assert not feasible_power_set(ice, DispatchState(0, 2.0, 1, 0), 1).off_allowed


def test_ice_step_example():
    r = step_dispatch(lookup("ICE"), DispatchState(0, 9.9, 1, 0), 9.9, 9.0, 1)
    assert r.p == pytest.approx(13.5)
    assert r.offset == pytest.approx(5.4)
    assert r.offset_pu == pytest.approx(0.3)
    assert r.u == 1


def test_battery_follows_net():
    r = step_dispatch(lookup("Battery"), DispatchState(0, 0.0, 1, 0, 200.0), 0.0, 50.0, 1)
    assert r.p == 50.0 and r.offset == 0.0


def test_battery_idle_jump_is_limited_by_minimum_and_ramp():
    lhs = lookup("Latent Heat")
    fs = feasible_power_set(lhs, DispatchState(0, 0.0, 1, 0, 100.0), 1)
    assert fs.on == ((-0.58, -0.1), (0.0, 0.0), (0.1, 0.58))


def test_project_prefers_online_on_ties():
    from gridflex.realtime import FeasibleSet
    assert project(0.0, FeasibleSet(True, ((0.0, 1.0),))) == (0.0, 1)
    assert project(-1.0, FeasibleSet(True, ((0.5, 1.0),))) == (0.0, 0)


@pytest.mark.parametrize("spec", builtin_catalog(), ids=lambda s: s.name)
def test_zero_profile_rides_baseline(spec):
    prof = NetLoadProfile(1, np.zeros(30))
    tr = run_realtime(spec, prof)
    assert np.all(tr.offset == 0)
    assert np.array_equal(tr.power, tr.baseline)


@pytest.mark.parametrize("kind", ["intermittency", "energy-reserve"])
@pytest.mark.parametrize("spec", builtin_catalog(), ids=lambda s: s.name)
def test_realtime_trajectories_pass_audit(spec, kind):
    tr = run_realtime(spec, builtin_profile(kind, 1, seed=5))
    assert audit_trajectory(tr) == []


@pytest.mark.parametrize("spec", [s for s in builtin_catalog() if s.is_storage],
                         ids=lambda s: s.name)
def test_soc_enforced_keeps_store_in_range(spec):
    tr = run_realtime(spec, builtin_profile("energy-reserve", 1),
                      DispatchConfig(soc_enforced=True))
    assert tr.soc.min() >= 0.0
    assert tr.soc.max() <= spec.energy_cap
    assert audit_trajectory(tr) == []


def _literal_feasible(spec, p_prev, u_prev, off_count, dt, grid):
    """Grid points meeting the raw box, ramp and start-up constraints."""
    step = dt * spec.ramp
    tol = 1e-12 * spec.p_max  # p_prev + step - p_prev may exceed step by an ulp
    ok = (spec.p_min <= grid) & (grid <= spec.p_max)
    ok &= grid - p_prev <= step * u_prev + spec.p_min * (1 - u_prev) + tol
    ok &= p_prev - grid <= step + spec.p_min * (u_prev - 1) + tol
    if u_prev == 0 and off_count < spec.startup_minutes:
        ok[:] = False
    off_ok = (-p_prev <= step * u_prev - spec.p_min * u_prev) and p_prev <= spec.p_min * u_prev
    return grid[ok], off_ok


@st.composite
def _generator_case(draw):
    p_min = draw(st.floats(0.0, 5.0))
    p_max = p_min + draw(st.floats(0.5, 10.0))
    ramp = draw(st.floats(0.05, 5.0))
    spec = ResourceSpec(draw(st.sampled_from([ResourceRole.GENERATOR, ResourceRole.LOAD])),
                        "g", p_min, p_max, ramp, draw(st.integers(0, 4)))
    u_prev = draw(st.integers(0, 1))
    p_prev = draw(st.floats(p_min, p_max)) if u_prev else 0.0
    if u_prev and draw(st.booleans()):
        p_prev = p_min
    off_count = 0 if u_prev else draw(st.integers(0, 6))
    baseline = draw(st.floats(p_min, p_max))
    net = draw(st.floats(-p_max, p_max))
    return spec, DispatchState(0, p_prev, u_prev, off_count), baseline, net


@given(_generator_case())
@settings(max_examples=300, deadline=None)
def test_step_matches_grid_search(case):
    spec, state, baseline, net = case
    r = step_dispatch(spec, state, baseline, net, 1)
    target = baseline + net if spec.role is ResourceRole.GENERATOR else baseline - net
    # a clamp optimum sits at the target or at a constraint breakpoint
    pp, step = state.p_prev, spec.ramp
    breaks = [target, spec.p_min, spec.p_max, pp - step, pp + step, pp + spec.p_min]
    grid = np.concatenate([np.linspace(0.0, spec.p_max, 2001), breaks])
    on, off_ok = _literal_feasible(spec, pp, state.u_prev, state.off_count, 1, grid)
    candidates = list((target - on) ** 2)
    if off_ok:
        candidates.append(target ** 2)
    assert r.offset ** 2 == pytest.approx(min(candidates), rel=1e-9, abs=1e-12)
