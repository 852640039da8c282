import dataclasses

import numpy as np
import pytest

from gridflex.audit import (
    audit_trajectory, objectives_match, oracle_campaign, problem_from_dict, problem_to_dict,
    random_instance, realtime_optimality_audit,
)
from gridflex.catalog import lookup
from gridflex.dayahead import solve_dayahead_dp
from gridflex.realtime import run_realtime
from gridflex.scenario import builtin_profile


def _ice_run():
    return run_realtime(lookup("ICE"), builtin_profile("energy-reserve", 1))


def test_clean_trajectory_passes():
    tr = _ice_run()
    assert audit_trajectory(tr) == []
    assert realtime_optimality_audit(tr).passed


def test_ramp_violation_detected():
    tr = _ice_run()
    tr.power = tr.power.copy()
    tr.offset = tr.offset.copy()
    tr.power[10] += 5.0
    tr.offset[10] -= 5.0
    assert any("ramp" in e for e in audit_trajectory(tr))


def test_balance_violation_detected():
    tr = _ice_run()
    tr.offset = tr.offset.copy()
    tr.offset[3] += 1e-3
    assert any("balance" in e for e in audit_trajectory(tr))


def test_startup_gate_violation_detected():
    tr = _ice_run()
    tr.status = tr.status.copy()
    tr.power = tr.power.copy()
    tr.offset = tr.offset.copy()
    # drop offline for one step and immediately back on: the 5-minute gate is closed
    tr.status[0], tr.power[0] = 0, 0.0
    tr.offset[0] = tr.baseline[0] + tr.net_mw[0]
    tr.off_minutes = tr.off_minutes.copy()
    tr.off_minutes[1] = 1
    assert any("start-up gate" in e for e in audit_trajectory(tr))


def test_suboptimal_step_detected():
    tr = _ice_run()
    tr.offset = tr.offset.copy()
    t = int(np.flatnonzero(tr.offset == 0)[5])
    tr.offset[t] = 0.5
    rep = realtime_optimality_audit(tr)
    assert not rep.passed and f"step {t}" in rep.failures[0]


def test_problem_serialization_round_trip():
    prob = random_instance(np.random.default_rng(4))
    back = problem_from_dict(problem_to_dict(prob))
    assert solve_dayahead_dp(back).objective == solve_dayahead_dp(prob).objective
    assert problem_to_dict(back) == problem_to_dict(prob)


def test_objectives_match():
    assert objectives_match(None, None)
    assert not objectives_match(None, 1.0)
    assert objectives_match(1.0, 1.0)
    assert not objectives_match(1.0, 1.001)


def test_small_campaign_passes():
    res = oracle_campaign(20, seed=3)
    assert res.passed and res.worst_discrepancy == 0.0


def test_fault_injection_is_detected():
    assert not oracle_campaign(20, seed=3, fault=True).passed


def test_campaign_rejects_empty_caps():
    with pytest.raises(ValueError):
        oracle_campaign(10, max_steps=0)
