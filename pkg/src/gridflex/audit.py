"""Post-hoc verification written independently of the solvers.

Nothing here calls the solvers' feasibility code: constraints are
re-evaluated from their raw inequality form against the emitted
trajectories.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import ResourceRole, ResourceSpec
from .dayahead import (
    InfeasibleScheduleError,
    ScheduleProblem,
    brute_force_oracle,
    solve_dayahead_dp,
)
from .dispatch import Trajectory
from .scenario import NetLoadProfile, ProfileKind

REL_TOL = 1e-9


def _phi(spec: ResourceSpec, p):
    """Storage ramp coordinate, restated here so the audit does not import it."""
    p = np.asarray(p, dtype=float)
    mag = np.abs(p) - spec.p_min
    return np.where(p > 0, mag, np.where(p < 0, -mag, 0.0)) * (np.abs(p) >= spec.p_min)


def _bounds(role: ResourceRole, b: float, n: float) -> tuple[float, float]:
    if role is ResourceRole.GENERATOR:
        s = b + n
        return (min(s, 0.0), max(s, 0.0))
    if role is ResourceRole.LOAD:
        s = b - n
        return (min(-s, 0.0), max(-s, 0.0))
    return (min(n, 0.0), max(n, 0.0))


def _residual(role: ResourceRole, p: float, b: float, n: float, off: float) -> float:
    if role is ResourceRole.GENERATOR:
        return p - b - n + off
    if role is ResourceRole.LOAD:
        return b - p - n + off
    return p - n + off


def _offline_minutes_before(status: np.ndarray, t: int, dt: int, init_u: int, init_off: int) -> int:
    """Consecutive offline minutes immediately before step t, by scanning history."""
    k = t - 1
    minutes = 0
    while k >= 0 and status[k] == 0:
        minutes += dt
        k -= 1
    if k < 0 and init_u == 0:
        minutes += init_off
    return minutes


def audit_trajectory(tr: Trajectory, check_bounds: bool | None = None) -> list[str]:
    """Replay every constraint on a trajectory; return one message per violation."""
    spec, dt = tr.spec, tr.dt_minutes
    rated = spec.rated_power
    tol = REL_TOL * rated
    step = dt * spec.ramp
    net = tr.net_pu * rated
    errors: list[str] = []
    if check_bounds is None:
        check_bounds = tr.deficit_lo is not None

    p_prev, u_prev = tr.initial_power, tr.initial_status
    off_prev = tr.initial_off_minutes
    for t in range(tr.steps):
        p, u, off = float(tr.power[t]), int(tr.status[t]), float(tr.offset[t])
        where = f"step {t}"
        if u not in (0, 1):
            errors.append(f"{where}: status {u} not binary")
        if spec.is_storage:
            if u == 0 and p != 0.0:
                errors.append(f"{where}: offline storage at {p} MW")
            if u == 1 and p != 0.0 and not (spec.p_min - tol <= abs(p) <= spec.p_max + tol):
                errors.append(f"{where}: |p|={abs(p)} outside {{0}} ∪ [p_min, p_max]")
            d = abs(float(_phi(spec, p)) - float(_phi(spec, p_prev)))
            if d > step + tol:
                errors.append(f"{where}: storage ramp {d} > {step}")
        else:
            if not (spec.p_min * u - tol <= p <= spec.p_max * u + tol):
                errors.append(f"{where}: box violated, p={p}, u={u}")
            if p - p_prev > step * u_prev + spec.p_min * (u - u_prev) + tol:
                errors.append(f"{where}: upward ramp inequality violated")
            if p_prev - p > step * u + spec.p_min * (u_prev - u) + tol:
                errors.append(f"{where}: downward ramp inequality violated")

        expected_off = off_prev if t == 0 else (1 - u_prev) * (off_prev + dt)
        if int(tr.off_minutes[t]) != expected_off:
            errors.append(f"{where}: OFF counter {tr.off_minutes[t]} != recursion {expected_off}")
        if u_prev == 0 and u == 1:
            waited = _offline_minutes_before(tr.status, t, dt, tr.initial_status,
                                             tr.initial_off_minutes)
            if waited < spec.startup_minutes:
                errors.append(f"{where}: restarted after {waited} min < {spec.startup_minutes} min")
            if spec.startup_minutes > 0 and (u - u_prev) > expected_off / spec.startup_minutes:
                errors.append(f"{where}: start-up gate u_t - u_t-1 <= OFF_t / t_SU violated")

        r = _residual(spec.role, p, float(tr.baseline[t]), float(net[t]), off)
        if abs(r) > tol:
            errors.append(f"{where}: balance residual {r}")
        if check_bounds:
            lo, hi = _bounds(spec.role, float(tr.baseline[t]), float(net[t]))
            if not (lo - tol <= off <= hi + tol):
                errors.append(f"{where}: deficit {off} outside [{lo}, {hi}]")

        if tr.soc is not None and tr.meta.get("soc_enforced"):
            cap = spec.energy_cap
            if not (-REL_TOL * cap <= tr.soc[t] <= cap * (1 + REL_TOL)):
                errors.append(f"{where}: SoC {tr.soc[t]} outside [0, {cap}]")
        p_prev, u_prev, off_prev = p, u, expected_off
    return errors


# -- real-time per-step optimality -------------------------------------------------

def _candidate_window(spec: ResourceSpec, p_prev: float, u_prev: int, dt: float) -> tuple[float, float]:
    """Interval that contains every online power the raw constraints could allow."""
    step = dt * spec.ramp
    if spec.is_storage:
        lo, hi = p_prev - step - 2 * spec.p_min, p_prev + step + 2 * spec.p_min
        return max(lo, -spec.p_max), min(hi, spec.p_max)
    if u_prev == 0:
        return 0.0, min(spec.p_min, spec.p_max)
    return max(0.0, p_prev - step), min(spec.p_max, p_prev + step)


def _online_ok(spec: ResourceSpec, p: np.ndarray, p_prev: float, u_prev: int, waited: float,
               dt: float, soc: float | None, soc_enforced: bool) -> np.ndarray:
    step = dt * spec.ramp
    if u_prev == 0 and waited < spec.startup_minutes:
        return np.zeros(p.shape, dtype=bool)
    if spec.is_storage:
        ok = (p == 0) | ((np.abs(p) >= spec.p_min) & (np.abs(p) <= spec.p_max))
        ok &= np.abs(_phi(spec, p) - float(_phi(spec, p_prev if u_prev else 0.0))) <= step
        if soc_enforced and soc is not None:
            h = dt / 60.0
            after = np.where(p > 0, soc - p * h / spec.discharge_eff,
                             soc - p * h * spec.charge_eff)
            ok &= (after >= 0) & (after <= spec.energy_cap)
        return ok
    ok = (spec.p_min <= p) & (p <= spec.p_max)
    ok &= p - p_prev <= step * u_prev + spec.p_min * (1 - u_prev)
    ok &= p_prev - p <= step + spec.p_min * (u_prev - 1)
    return ok


def _offline_ok(spec: ResourceSpec, p_prev: float, u_prev: int, dt: float) -> bool:
    if spec.is_storage:
        return u_prev == 0 or abs(float(_phi(spec, p_prev))) <= dt * spec.ramp
    step = dt * spec.ramp
    return (0 - p_prev <= step * u_prev - spec.p_min * u_prev) and (p_prev <= spec.p_min * u_prev)


@dataclass
class OptimalityReport:
    steps_checked: int = 0
    grid_points: int = 0
    worst_gain: float = 0.0          # largest (solver err² - grid err²) / rated², positive = worse
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def realtime_optimality_audit(tr: Trajectory, resolution: float = 1e-6, tol: float = 1e-9,
                              report: OptimalityReport | None = None,
                              cache: dict | None = None) -> OptimalityReport:
    """Grid-search each step's feasible set and compare with the solver's choice.

    The grid is the set of multiples of ``resolution * rated`` inside a window
    that contains every power the constraints could admit, plus the offline
    point. Points farther from the target than the solver's own deficit cannot
    improve on it, so the window is also clipped to that radius. A step fails
    if some feasible grid point has a squared deficit smaller than the
    solver's by more than ``tol * rated**2``. With SoC enforcement only the
    one-step SoC bound is applied, which is looser than the solver's rule, so
    a reported failure there may be a point the solver rightly refused.
    """
    report = report or OptimalityReport()
    spec, dt = tr.spec, tr.dt_minutes
    rated = spec.rated_power
    h = resolution * rated
    net = tr.net_pu * rated
    soc_enforced = bool(tr.meta.get("soc_enforced"))
    p_prev, u_prev = tr.initial_power, tr.initial_status
    soc_prev = tr.initial_soc
    for t in range(tr.steps):
        b = float(tr.baseline[t])
        if spec.role is ResourceRole.GENERATOR:
            target = b + float(net[t])
        elif spec.role is ResourceRole.LOAD:
            target = b - float(net[t])
        else:
            target = float(net[t])
        waited = _offline_minutes_before(tr.status, t, dt, tr.initial_status, tr.initial_off_minutes)
        chosen = float(tr.offset[t]) ** 2
        key = (p_prev, u_prev, waited >= spec.startup_minutes, soc_prev, target, chosen)
        if cache is not None and key in cache:
            best = cache[key]
        else:
            lo, hi = _candidate_window(spec, p_prev, u_prev, dt)
            radius = math.sqrt(chosen) + h
            lo, hi = max(lo, target - radius), min(hi, target + radius)
            best = math.inf
            if lo <= hi:
                ks = np.arange(math.floor(lo / h), math.ceil(hi / h) + 1)
                grid = ks * h
                ok = _online_ok(spec, grid, p_prev, u_prev, waited, dt, soc_prev, soc_enforced)
                report.grid_points += grid.size
                if ok.any():
                    best = float(np.min((target - grid[ok]) ** 2))
            if _offline_ok(spec, p_prev, u_prev, dt):
                best = min(best, target * target)
            if cache is not None:
                cache[key] = best
        gain = (chosen - best) / rated ** 2
        report.worst_gain = max(report.worst_gain, gain)
        if gain > tol:
            report.failures.append(
                f"{spec.name} step {t}: grid found err² {best:.6g} < solver {chosen:.6g}"
            )
        report.steps_checked += 1
        p_prev, u_prev = float(tr.power[t]), int(tr.status[t])
        if tr.soc is not None:
            soc_prev = float(tr.soc[t])
    return report


# -- DP versus exhaustive enumeration ------------------------------------------------

def random_instance(rng: np.random.Generator, max_steps: int = 8, max_levels: int = 7,
                    max_startup: int = 3, role: ResourceRole | None = None) -> ScheduleProblem:
    roles = list(ResourceRole)
    role = role or roles[int(rng.integers(len(roles)))]
    p_max = float(np.round(rng.uniform(0.5, 5.0), 3))
    p_min = 0.0 if rng.random() < 0.25 else float(np.round(rng.uniform(0.0, 0.6) * p_max, 3))
    ramp = float(np.round(rng.uniform(0.05, 1.2) * p_max, 3))
    startup = int(rng.integers(0, max_startup + 1))
    storage = {}
    if role is ResourceRole.STORAGE:
        storage = dict(charge_eff=float(np.round(rng.uniform(0.6, 1.0), 3)),
                       discharge_eff=float(np.round(rng.uniform(0.6, 1.0), 3)),
                       energy_cap=float(np.round(rng.uniform(0.05, 2.0) * p_max, 3)))
    spec = ResourceSpec(role, f"rand-{role.value}", p_min, p_max, ramp, startup, **storage)
    T = int(rng.integers(1, max_steps + 1))
    values = np.round(rng.uniform(-0.7, 0.7, size=T), 3)
    profile = NetLoadProfile(1, values, ProfileKind.CUSTOM)
    if rng.random() < 0.5:
        baseline = np.full(T, float(np.round(rng.uniform(p_min, p_max), 3)))
    else:
        baseline = np.round(rng.uniform(p_min, p_max, size=T), 3)
    init_u = int(rng.random() < 0.8)
    soc_enforced = role is ResourceRole.STORAGE and rng.random() < 0.5
    return ScheduleProblem(
        spec=spec,
        profile=profile,
        baseline=baseline,
        power_levels=int(rng.integers(2, max_levels + 1)),
        soc_enforced=soc_enforced,
        soc_levels=int(rng.integers(2, 6)),
        initial_status=init_u,
        initial_off_intervals=0 if init_u else int(rng.integers(0, 4)),
        initial_soc_fraction=float(np.round(rng.uniform(0, 1), 3)),
    )


def sentinel_instance() -> ScheduleProblem:
    """Toy resource that can hold 0.4 MW exactly; optimum is zero only if it holds."""
    spec = ResourceSpec(ResourceRole.GENERATOR, "toy", 0.0, 1.0, 1.0, 0)
    profile = NetLoadProfile(1, np.array([0.4, 0.4, 0.4]), ProfileKind.CUSTOM)
    return ScheduleProblem(spec, profile, np.zeros(3), power_levels=6, initial_status=1)


def problem_to_dict(problem: ScheduleProblem) -> dict:
    s = problem.spec
    return {
        "spec": {"role": s.role.value, "name": s.name, "p_min": s.p_min, "p_max": s.p_max,
                 "ramp": s.ramp, "startup_minutes": s.startup_minutes,
                 "charge_eff": s.charge_eff, "discharge_eff": s.discharge_eff,
                 "energy_cap": s.energy_cap},
        "dt_minutes": problem.dt,
        "net_pu": problem.profile.values.tolist(),
        "baseline": problem.baseline.tolist(),
        "power_levels": problem.power_levels,
        "soc_enforced": problem.soc_enforced,
        "soc_levels": problem.soc_levels,
        "initial_status": problem.initial_status,
        "initial_off_intervals": problem.initial_off_intervals,
        "initial_soc_fraction": problem.initial_soc_fraction,
    }


def problem_from_dict(d: dict) -> ScheduleProblem:
    s = d["spec"]
    spec = ResourceSpec(ResourceRole(s["role"]), s["name"], s["p_min"], s["p_max"], s["ramp"],
                        s["startup_minutes"], s["charge_eff"], s["discharge_eff"], s["energy_cap"])
    return ScheduleProblem(
        spec=spec,
        profile=NetLoadProfile(d["dt_minutes"], np.array(d["net_pu"]), ProfileKind.CUSTOM),
        baseline=np.array(d["baseline"]),
        power_levels=d["power_levels"],
        soc_enforced=d["soc_enforced"],
        soc_levels=d["soc_levels"],
        initial_status=d["initial_status"],
        initial_off_intervals=d["initial_off_intervals"],
        initial_soc_fraction=d["initial_soc_fraction"],
    )


def _solve(fn, problem: ScheduleProblem, **kw) -> tuple[float | None, Trajectory | None]:
    try:
        tr = fn(problem, **kw)
    except InfeasibleScheduleError:
        return None, None
    return math.fsum(tr.offset ** 2), tr


@dataclass
class CampaignResult:
    instances: int = 0
    infeasible: int = 0
    worst_discrepancy: float = 0.0
    mismatches: list[str] = field(default_factory=list)
    audit_failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches and not self.audit_failures


def objectives_match(a: float | None, b: float | None) -> bool:
    # both sides sum the same squared deficits; only summation order can differ
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def oracle_campaign(n_instances: int = 100, seed: int = 0, max_steps: int = 8,
                    max_levels: int = 7, max_startup: int = 3, fault: bool = False) -> CampaignResult:
    if max_steps < 1 or max_levels < 2 or n_instances < 1:
        raise ValueError("caps must allow at least one step, two power levels and one instance")
    rng = np.random.default_rng(seed)
    roles = list(ResourceRole)
    problems = [sentinel_instance()]
    for i in range(n_instances):
        problems.append(random_instance(rng, max_steps, max_levels, max_startup,
                                        role=roles[i % len(roles)]))
    res = CampaignResult()
    for problem in problems:
        dp_obj, dp_tr = _solve(solve_dayahead_dp, problem, _fault=fault)
        or_obj, or_tr = _solve(brute_force_oracle, problem)
        res.instances += 1
        if dp_obj is None and or_obj is None:
            res.infeasible += 1
        if dp_obj is not None and or_obj is not None:
            res.worst_discrepancy = max(res.worst_discrepancy, abs(dp_obj - or_obj))
        if not objectives_match(dp_obj, or_obj):
            res.mismatches.append(
                f"dp={dp_obj} oracle={or_obj} instance={json.dumps(problem_to_dict(problem))}"
            )
        for tr in (dp_tr, or_tr):
            if tr is not None:
                errs = audit_trajectory(tr)
                if errs:
                    res.audit_failures.append(f"{tr.mode}: {errs[0]}")
    return res
