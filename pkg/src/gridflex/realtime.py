"""Per-interval deficit minimization (no lookahead).

At each step the resource picks the feasible (power, status) pair that
minimizes the squared deficit of that step alone, then the state rolls
forward. Because the objective is ``(target - p)**2`` over a union of
intervals, the optimum is the clamp of the target onto the closest piece.

Ramping between steps follows the two inequalities

    P_t - P_{t-1} <= dt*r*u_{t-1} + P_min*(u_t - u_{t-1})
    P_{t-1} - P_t <= dt*r*u_t     + P_min*(u_{t-1} - u_t)

taken literally: a unit starting up enters at exactly ``p_min`` and a unit
shuts down only from ``p_min``. Storage applies the same limits to its
ramp coordinate (see :func:`gridflex.dispatch.ramp_coordinate`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import ResourceRole, ResourceSpec
from .dispatch import DispatchConfig, Trajectory, offset_for, target_power
from .scenario import NetLoadProfile
from .storage import apply_soc, viable_power_limits


@dataclass(frozen=True)
class DispatchState:
    t: int
    p_prev: float
    u_prev: int
    off_count: int
    soc: float | None = None


@dataclass(frozen=True)
class FeasibleSet:
    """Options for the next step: staying/going offline, and online power pieces."""

    off_allowed: bool
    on: tuple[tuple[float, float], ...]

    @property
    def on_interval(self) -> tuple[float, float] | None:
        """Hull of the online pieces, or None when the unit must stay off."""
        if not self.on:
            return None
        return min(lo for lo, _ in self.on), max(hi for _, hi in self.on)


@dataclass(frozen=True)
class StepResult:
    p: float
    u: int
    offset: float
    offset_pu: float


def startup_gate_open(spec: ResourceSpec, state: DispatchState) -> bool:
    return state.u_prev == 1 or state.off_count >= spec.startup_minutes


def _storage_pieces(spec: ResourceSpec, phi_prev: float, dt: float,
                    soc_limits: tuple[float, float] | None) -> tuple[tuple[float, float], ...]:
    span = spec.p_max - spec.p_min
    w_lo = max(-span, phi_prev - dt * spec.ramp)
    w_hi = min(span, phi_prev + dt * spec.ramp)
    pieces = []
    if w_hi >= 0:
        pieces.append((spec.p_min + max(0.0, w_lo), spec.p_min + w_hi))
    if w_lo <= 0 <= w_hi:
        pieces.append((0.0, 0.0))
    if w_lo <= 0:
        pieces.append((-spec.p_min + w_lo, -spec.p_min - max(0.0, -w_hi)))
    if soc_limits is not None:
        s_lo, s_hi = soc_limits
        clipped = []
        for lo, hi in pieces:
            lo, hi = max(lo, s_lo), min(hi, s_hi)
            if lo <= hi:
                clipped.append((lo, hi))
        if not clipped:
            # only reachable through rounding on the fastest ramp-down path,
            # which is viable by construction
            nearest = min((lo if lo > 0 else hi for lo, hi in pieces), key=abs)
            clipped = [(nearest, nearest)]
        pieces = clipped
    return tuple(sorted(pieces))


def feasible_power_set(spec: ResourceSpec, state: DispatchState, dt: float,
                       soc_enforced: bool = False) -> FeasibleSet:
    if spec.role is ResourceRole.STORAGE:
        limits = None
        if soc_enforced and state.soc is not None:
            limits = viable_power_limits(state.soc, spec, dt)
        phi_prev = 0.0
        if state.u_prev:
            phi_prev = float(np.sign(state.p_prev) * max(abs(state.p_prev) - spec.p_min, 0.0))
        pieces = _storage_pieces(spec, phi_prev, dt, limits)
        if not startup_gate_open(spec, state):
            pieces = ()
        # idle is reachable exactly when 0 is an online option, so going
        # offline never beats staying online
        off = state.u_prev == 0 or any(lo <= 0.0 <= hi for lo, hi in pieces)
        return FeasibleSet(off, pieces)

    pp, u0, step = state.p_prev, state.u_prev, dt * spec.ramp
    # u_t = 0: P_t = 0 must satisfy both inequalities
    off = (0.0 - pp <= step * u0 + spec.p_min * (0 - u0)) and (pp - 0.0 <= spec.p_min * u0)
    pieces: tuple[tuple[float, float], ...] = ()
    if startup_gate_open(spec, state):
        hi = min(spec.p_max, pp + step * u0 + spec.p_min * (1 - u0))
        lo = max(spec.p_min, pp - step + spec.p_min * (1 - u0))
        if lo <= hi:
            pieces = ((lo, hi),)
    return FeasibleSet(off, pieces)


def project(target: float, feasible: FeasibleSet) -> tuple[float, int]:
    """Closest feasible power to ``target``.

    Online pieces win ties against going offline; among online pieces the
    smaller magnitude wins.
    """
    best: tuple[float, float, float] | None = None  # (err2, |p|, p)
    for lo, hi in feasible.on:
        p = min(max(target, lo), hi)
        cand = ((target - p) ** 2, abs(p), p)
        if best is None or cand[:2] < best[:2]:
            best = cand
    if feasible.off_allowed and (best is None or target ** 2 < best[0]):
        return 0.0, 0
    if best is None:
        raise RuntimeError("empty feasible set")  # unreachable: off is always allowed then
    return best[2], 1


def step_dispatch(spec: ResourceSpec, state: DispatchState, baseline_t: float, net_t: float,
                  dt: float, soc_enforced: bool = False) -> StepResult:
    feasible = feasible_power_set(spec, state, dt, soc_enforced)
    target = target_power(spec.role, baseline_t, net_t)
    p, u = project(target, feasible)
    offset = offset_for(spec.role, p, baseline_t, net_t)
    return StepResult(p=p, u=u, offset=offset, offset_pu=offset / spec.rated_power)


def initial_state(spec: ResourceSpec, baseline0: float, config: DispatchConfig) -> DispatchState:
    soc = None
    if spec.role is ResourceRole.STORAGE:
        soc = config.initial_soc_fraction * spec.energy_cap
    if config.initial_status:
        p0 = 0.0 if spec.role is ResourceRole.STORAGE else float(baseline0)
        return DispatchState(t=0, p_prev=p0, u_prev=1, off_count=0, soc=soc)
    return DispatchState(t=0, p_prev=0.0, u_prev=0, off_count=0, soc=soc)


def run_realtime(spec: ResourceSpec, profile: NetLoadProfile,
                 config: DispatchConfig | None = None) -> Trajectory:
    config = config or DispatchConfig()
    dt = profile.dt_minutes
    n = profile.steps
    baseline = config.baseline(spec, n)
    net = profile.values * spec.rated_power
    state = initial_state(spec, baseline[0], config)
    init = state

    power = np.zeros(n)
    status = np.zeros(n, dtype=int)
    offset = np.zeros(n)
    off_minutes = np.zeros(n, dtype=int)
    track_soc = spec.role is ResourceRole.STORAGE and config.soc_enforced
    soc = np.zeros(n) if spec.role is ResourceRole.STORAGE else None

    for t in range(n):
        res = step_dispatch(spec, state, baseline[t], net[t], dt, track_soc)
        power[t], status[t], offset[t] = res.p, res.u, res.offset
        off_minutes[t] = state.off_count
        new_soc = state.soc
        if soc is not None:
            new_soc = apply_soc(state.soc, res.p, dt, spec)
            if track_soc:
                # limits keep this within rounding of the bounds
                new_soc = min(max(new_soc, 0.0), spec.energy_cap)
            soc[t] = new_soc
        state = DispatchState(
            t=t + 1,
            p_prev=res.p,
            u_prev=res.u,
            off_count=0 if res.u else state.off_count + dt,
            soc=new_soc,
        )

    return Trajectory(
        spec=spec,
        dt_minutes=dt,
        mode="realtime",
        net_pu=profile.values.copy(),
        baseline=baseline,
        power=power,
        status=status,
        offset=offset,
        off_minutes=off_minutes,
        soc=soc,
        initial_power=init.p_prev,
        initial_status=init.u_prev,
        initial_off_minutes=init.off_count,
        initial_soc=init.soc,
        meta={"soc_enforced": bool(track_soc)},
    )
