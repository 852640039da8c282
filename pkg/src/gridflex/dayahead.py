"""Horizon-coupled peak-shaving schedule.

Minimizes the summed squared deficit over the whole horizon, subject to the
box, ramping, commitment and start-up constraints plus per-step deficit-sign
bounds that forbid over-compensation. The product term in the offline-time
recursion ``OFF_t = (1 - u_{t-1}) * (OFF_{t-1} + 1)`` makes this a nonconvex
mixed-integer problem, so it is solved exactly on a discretized power grid by
dynamic programming. The DP state is (power level or offline counter, SoC
level); the offline counter saturates at the start-up time since larger
values open the gate identically.

:func:`brute_force_oracle` enumerates the same discrete problem directly and
serves as an independent check on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import ResourceRole, ResourceSpec
from .dispatch import DispatchConfig, Trajectory, offset_for, ramp_coordinate, target_power
from .scenario import NetLoadProfile
from .storage import apply_soc

DEFAULT_DT_MINUTES = 15
DEFAULT_POWER_LEVELS = 257
DEFAULT_SOC_LEVELS = 33

ORACLE_MAX_STEPS = 10
ORACLE_MAX_LEVELS = 8


class InfeasibleScheduleError(RuntimeError):
    pass


def deficit_bounds(role: ResourceRole, baseline_t: float, net_t: float) -> tuple[float, float]:
    """Allowed range of the deficit at one step; always contains 0."""
    if role is ResourceRole.GENERATOR:
        s = baseline_t + net_t
        return (s, 0.0) if s < 0 else (0.0, s)
    if role is ResourceRole.LOAD:
        s = baseline_t - net_t
        return (-s, 0.0) if s > 0 else (0.0, -s)
    s = net_t
    return (s, 0.0) if s < 0 else (0.0, s)


@dataclass
class ScheduleProblem:
    spec: ResourceSpec
    profile: NetLoadProfile
    baseline: np.ndarray
    power_levels: int = DEFAULT_POWER_LEVELS
    soc_enforced: bool = False
    soc_levels: int = DEFAULT_SOC_LEVELS
    initial_status: int = 1
    initial_off_intervals: int = 0
    initial_soc_fraction: float = 0.5
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.baseline = np.asarray(self.baseline, dtype=float)
        if self.baseline.shape != (self.profile.steps,):
            raise ValueError("baseline length must match the profile")
        if self.power_levels < 2:
            raise ValueError(f"power_levels must be >= 2, got {self.power_levels}")
        if self.soc_enforced:
            if not self.spec.is_storage:
                raise ValueError("soc_enforced applies to storage resources only")
            if self.soc_levels < 2:
                raise ValueError(f"soc_levels must be >= 2, got {self.soc_levels}")

    @classmethod
    def from_config(cls, spec: ResourceSpec, profile: NetLoadProfile,
                    config: DispatchConfig) -> "ScheduleProblem":
        return cls(
            spec=spec,
            profile=profile,
            baseline=config.baseline(spec, profile.steps),
            power_levels=config.power_levels,
            soc_enforced=config.soc_enforced and spec.is_storage,
            soc_levels=config.soc_levels,
            initial_status=config.initial_status,
            initial_soc_fraction=config.initial_soc_fraction,
        )

    @property
    def dt(self) -> int:
        return self.profile.dt_minutes

    @property
    def steps(self) -> int:
        return self.profile.steps

    @property
    def net(self) -> np.ndarray:
        return self.profile.values * self.spec.rated_power

    @property
    def startup_intervals(self) -> int:
        return math.ceil(self.spec.startup_minutes / self.dt)

    def online_levels(self) -> np.ndarray:
        """Sorted online power levels (signed for storage)."""
        grid = np.unique(np.linspace(self.spec.p_min, self.spec.p_max, self.power_levels))
        if self.spec.is_storage:
            grid = np.unique(np.concatenate([-grid, [0.0], grid]))
        return grid

    def soc_grid(self) -> np.ndarray:
        if not self.soc_enforced:
            return np.array([np.nan])
        return np.linspace(0.0, self.spec.energy_cap, self.soc_levels)

    def initial_soc_index(self) -> int:
        if not self.soc_enforced:
            return 0
        grid = self.soc_grid()
        return int(np.searchsorted(grid, self.initial_soc_fraction * self.spec.energy_cap,
                                   side="right") - 1)

    def initial_power_level(self) -> float:
        if self.spec.is_storage:
            return 0.0
        levels = self.online_levels()
        return float(levels[np.argmin(np.abs(levels - self.baseline[0]))])


def snap_soc(grid: np.ndarray, soc: float) -> int:
    """Index of the largest grid value not above ``soc``, or -1 when outside [0, cap]."""
    if soc < grid[0] or soc > grid[-1]:
        return -1
    return int(np.searchsorted(grid, soc, side="right") - 1)


class _StateSpace:
    """Enumerated DP states: online levels first, then offline counters 0..K."""

    def __init__(self, problem: ScheduleProblem) -> None:
        self.problem = problem
        spec = problem.spec
        self.levels = problem.online_levels()
        self.K = problem.startup_intervals
        n_on = self.levels.size
        self.n_on = n_on
        self.n = n_on + self.K + 1
        self.power = np.concatenate([self.levels, np.zeros(self.K + 1)])
        self.status = np.concatenate([np.ones(n_on, dtype=int), np.zeros(self.K + 1, dtype=int)])
        self.counter = np.concatenate([np.zeros(n_on, dtype=int), np.arange(self.K + 1)])

        dt_r = problem.dt * spec.ramp
        F = np.zeros((self.n, self.n), dtype=bool)
        on = slice(0, n_on)
        if spec.is_storage:
            phi = ramp_coordinate(spec, self.levels)
            F[on, on] = np.abs(phi[None, :] - phi[:, None]) <= dt_r
            reach0 = np.abs(phi) <= dt_r
            F[:n_on, n_on + min(1, self.K)] = reach0   # shut down (counter 1, or 0 when K=0)
            start_targets = reach0
        else:
            p = self.levels
            F[on, on] = np.abs(p[None, :] - p[:, None]) <= dt_r
            shut = (p <= spec.p_min) & (-p <= dt_r - spec.p_min)
            F[:n_on, n_on + min(1, self.K)] = shut
            start_targets = (p <= spec.p_min) & (p >= spec.p_min - dt_r)
        for c in range(self.K + 1):
            row = n_on + c
            F[row, n_on + min(self.K, c + 1)] = True
            if c >= self.K:
                F[row, :n_on] = start_targets
        self.F = F

    def initial_index(self) -> int:
        pr = self.problem
        if pr.initial_status:
            return int(np.flatnonzero(self.levels == pr.initial_power_level())[0])
        return self.n_on + min(self.K, pr.initial_off_intervals)


def _step_costs(problem: ScheduleProblem, power: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step, per-state squared deficit (inf outside the bounds), plus bounds."""
    role = problem.spec.role
    net = problem.net
    T = problem.steps
    cost = np.empty((T, power.size))
    lo = np.empty(T)
    hi = np.empty(T)
    for t in range(T):
        b, n = float(problem.baseline[t]), float(net[t])
        lo[t], hi[t] = deficit_bounds(role, b, n)
        off = np.array([offset_for(role, float(p), b, n) for p in power])
        ok = (off >= lo[t]) & (off <= hi[t])
        cost[t] = np.where(ok, off * off, np.inf)
    return cost, lo, hi


def _soc_transitions(problem: ScheduleProblem, power: np.ndarray, soc_grid: np.ndarray) -> np.ndarray:
    """nxt[s, q]: SoC index after holding state s's power from SoC index q (-1: infeasible)."""
    Q = soc_grid.size
    nxt = np.empty((power.size, Q), dtype=int)
    if not problem.soc_enforced:
        nxt[:] = 0
        return nxt
    for s, p in enumerate(power):
        for q, soc in enumerate(soc_grid):
            nxt[s, q] = snap_soc(soc_grid, apply_soc(float(soc), float(p), problem.dt, problem.spec))
    return nxt


def solve_dayahead_dp(problem: ScheduleProblem, _fault: bool = False) -> Trajectory:
    """Exact minimum of the discretized schedule problem.

    ``_fault`` flips the hold-level transitions on purpose; used only to
    prove the oracle campaign detects a broken solver.
    """
    space = _StateSpace(problem)
    S, T = space.n, problem.steps
    F = space.F.copy()
    if _fault:
        idx = np.arange(space.n_on)
        F[idx, idx] = ~F[idx, idx]
    soc_grid = problem.soc_grid()
    Q = soc_grid.size
    cost, lo, hi = _step_costs(problem, space.power)
    nxt = _soc_transitions(problem, space.power, soc_grid)

    V = np.full((S, Q), np.inf)
    V[space.initial_index(), problem.initial_soc_index()] = 0.0
    pred = np.empty((T, S, Q), dtype=np.int64)
    b_idx = np.repeat(np.arange(S), Q)
    q_idx = np.tile(np.arange(Q), S)
    for t in range(T):
        masked = np.where(F[:, :, None], V[:, None, :], np.inf)      # (a, b, q)
        best_a = np.argmin(masked, axis=0)                            # (b, q)
        M = np.take_along_axis(masked, best_a[None], axis=0)[0]
        C = (M + cost[t][:, None]).ravel()
        q_next = nxt.ravel()
        valid = np.isfinite(C) & (q_next >= 0)
        V = np.full((S, Q), np.inf)
        pred_t = np.full((S, Q), -1, dtype=np.int64)
        if valid.any():
            tgt = b_idx[valid] * Q + q_next[valid]
            vals = C[valid]
            src = best_a.ravel()[valid] * Q + q_idx[valid]
            order = np.lexsort((src, vals, tgt))
            first = np.unique(tgt[order], return_index=True)[1]
            chosen = order[first]
            V.ravel()[tgt[chosen]] = vals[chosen]
            pred_t.ravel()[tgt[chosen]] = src[chosen]
        pred[t] = pred_t

    if not np.isfinite(V).any():
        raise InfeasibleScheduleError(
            f"no feasible schedule for {problem.spec.name} over {T} steps"
        )
    flat = int(np.argmin(V.ravel()))
    path = np.empty(T, dtype=np.int64)
    for t in range(T - 1, -1, -1):
        path[t] = flat
        flat = int(pred[t].ravel()[flat])
    states = path // Q
    socs = path % Q
    return _trajectory(problem, space.power[states], space.status[states], lo, hi,
                       soc_grid[socs] if problem.soc_enforced else None, "dayahead-dp")


def _trajectory(problem: ScheduleProblem, power: np.ndarray, status: np.ndarray,
                lo: np.ndarray, hi: np.ndarray, soc: np.ndarray | None, mode: str) -> Trajectory:
    spec = problem.spec
    role = spec.role
    net = problem.net
    offset = np.array([offset_for(role, float(p), float(b), float(n))
                       for p, b, n in zip(power, problem.baseline, net)])
    dt = problem.dt
    init_u = int(problem.initial_status)
    init_off = 0 if init_u else problem.initial_off_intervals
    off = np.empty(power.size, dtype=int)
    off[0] = init_off
    for t in range(1, power.size):
        off[t] = (1 - int(status[t - 1])) * (off[t - 1] + 1)
    init_soc = None
    if spec.is_storage:
        if soc is None:
            # unconstrained bookkeeping, reported for information
            soc = np.empty(power.size)
            level = problem.initial_soc_fraction * spec.energy_cap
            for t, p in enumerate(power):
                level = apply_soc(level, float(p), dt, spec)
                soc[t] = level
            init_soc = problem.initial_soc_fraction * spec.energy_cap
        else:
            init_soc = float(problem.soc_grid()[problem.initial_soc_index()])
    return Trajectory(
        spec=spec,
        dt_minutes=dt,
        mode=mode,
        net_pu=problem.profile.values.copy(),
        baseline=problem.baseline.copy(),
        power=np.asarray(power, dtype=float),
        status=np.asarray(status, dtype=int),
        offset=offset,
        off_minutes=off * dt,
        soc=soc,
        initial_power=problem.initial_power_level() if init_u else 0.0,
        initial_status=init_u,
        initial_off_minutes=init_off * dt,
        initial_soc=init_soc,
        deficit_lo=lo,
        deficit_hi=hi,
        meta={"soc_enforced": problem.soc_enforced, "power_levels": problem.power_levels},
    )


def run_dayahead(spec: ResourceSpec, profile: NetLoadProfile,
                 config: DispatchConfig | None = None) -> Trajectory:
    return solve_dayahead_dp(ScheduleProblem.from_config(spec, profile, config or DispatchConfig()))


def brute_force_oracle(problem: ScheduleProblem) -> Trajectory:
    """Exhaustive search over every status/power-level sequence.

    Each candidate is checked against the constraints as written: box,
    both ramping inequalities, the OFF recursion without saturation, the
    start-up gate as a ratio, and the deficit bounds. Partial sequences are
    cut only when they already violate a constraint or cannot beat the best
    complete sequence found so far, so the result is the exact optimum.
    """
    if not 1 <= problem.steps <= ORACLE_MAX_STEPS:
        raise ValueError(f"oracle needs 1..{ORACLE_MAX_STEPS} steps, got {problem.steps}")
    if problem.power_levels > ORACLE_MAX_LEVELS:
        raise ValueError(f"oracle needs at most {ORACLE_MAX_LEVELS} power levels")
    spec = problem.spec
    role = spec.role
    dt = problem.dt
    T = problem.steps
    net = problem.net
    base = problem.baseline
    grid = np.linspace(spec.p_min, spec.p_max, problem.power_levels)
    if spec.is_storage:
        powers = sorted(set(grid.tolist()) | set((-grid).tolist()) | {0.0})
    else:
        powers = sorted(set(grid.tolist()))
    options = [(0.0, 0)] + [(p, 1) for p in powers]
    soc_grid = problem.soc_grid()

    def phi(p: float) -> float:
        return math.copysign(max(abs(p) - spec.p_min, 0.0), p) if p else 0.0

    def transition_ok(p0: float, u0: int, off_t: int, p1: float, u1: int) -> bool:
        if spec.is_storage:
            if u1 == 0 and p1 != 0:
                return False
            if u1 == 1 and p1 != 0 and not (spec.p_min <= abs(p1) <= spec.p_max):
                return False
            ramp_ok = abs(phi(p1) - phi(p0)) <= dt * spec.ramp
        else:
            if not (spec.p_min * u1 <= p1 <= spec.p_max * u1):
                return False
            ramp_ok = (p1 - p0 <= dt * spec.ramp * u0 + spec.p_min * (u1 - u0)
                       and p0 - p1 <= dt * spec.ramp * u1 + spec.p_min * (u0 - u1))
        if not ramp_ok:
            return False
        if u1 - u0 > 0:
            if spec.startup_minutes > 0 and (u1 - u0) > off_t * dt / spec.startup_minutes:
                return False
        return True

    step_cost: list[dict[float, float]] = []
    for t in range(T):
        lo, hi = deficit_bounds(role, float(base[t]), float(net[t]))
        costs = {}
        for p, _ in options:
            off = offset_for(role, p, float(base[t]), float(net[t]))
            costs[p] = off * off if lo <= off <= hi else math.inf
        step_cost.append(costs)
    # admissible remaining-cost bound
    floor = [min(c.values()) for c in step_cost]
    tail = [0.0] * (T + 1)
    for t in range(T - 1, -1, -1):
        tail[t] = tail[t + 1] + floor[t]

    best = [math.inf, None]
    init_u = int(problem.initial_status)
    init_p = problem.initial_power_level() if init_u else 0.0
    init_off = 0 if init_u else problem.initial_off_intervals
    init_soc = float(soc_grid[problem.initial_soc_index()]) if problem.soc_enforced else None

    def search(t: int, p0: float, u0: int, off_prev: int, soc: float | None,
               acc: float, seq: list) -> None:
        if acc + tail[t] >= best[0] and best[1] is not None:
            return
        if t == T:
            best[0], best[1] = acc, list(seq)
            return
        off_t = off_prev if t == 0 else (1 - u0) * (off_prev + 1)
        children = []
        for p1, u1 in options:
            c = step_cost[t][p1]
            if c == math.inf or not transition_ok(p0, u0, off_t, p1, u1):
                continue
            new_soc = soc
            if problem.soc_enforced:
                raw = apply_soc(soc, p1, dt, spec)
                if raw < 0 or raw > spec.energy_cap:
                    continue
                new_soc = float(soc_grid[soc_grid <= raw].max())
            children.append((c, abs(p1), p1, u1, new_soc))
        children.sort(key=lambda x: (x[0], x[1], -x[3]))
        for c, _, p1, u1, new_soc in children:
            seq.append((p1, u1, new_soc))
            search(t + 1, p1, u1, off_t, new_soc, acc + c, seq)
            seq.pop()

    search(0, init_p, init_u, init_off, init_soc, 0.0, [])
    if best[1] is None:
        raise InfeasibleScheduleError(f"oracle: no feasible schedule for {spec.name}")
    seq = best[1]
    power = np.array([s[0] for s in seq])
    status = np.array([s[1] for s in seq], dtype=int)
    soc = np.array([s[2] for s in seq]) if problem.soc_enforced else None
    lo = np.array([deficit_bounds(role, float(b), float(n))[0] for b, n in zip(base, net)])
    hi = np.array([deficit_bounds(role, float(b), float(n))[1] for b, n in zip(base, net)])
    traj = _trajectory(problem, power, status, lo, hi, soc, "dayahead-oracle")
    traj.meta["objective"] = best[0]
    return traj
