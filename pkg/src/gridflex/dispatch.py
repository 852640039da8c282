"""Pieces shared by the real-time and day-ahead solvers.

Power balance per role (all MW, ``net`` already scaled by rated power):

* generator: ``p = baseline + net - offset``
* load:      ``baseline = p + net - offset``
* storage:   ``p = net - offset``

so each role has a target power that zeroes the deficit, and in every case
``offset**2 == (target - p)**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .catalog import ResourceRole, ResourceSpec
from .scenario import NetLoadProfile


def target_power(role: ResourceRole, baseline: float, net: float) -> float:
    if role is ResourceRole.GENERATOR:
        return baseline + net
    if role is ResourceRole.LOAD:
        return baseline - net
    return net


def offset_for(role: ResourceRole, p: float, baseline: float, net: float) -> float:
    """Deficit implied by the balance equation for power ``p``."""
    if role is ResourceRole.GENERATOR:
        return baseline + net - p
    if role is ResourceRole.LOAD:
        return p - (baseline - net)
    return net - p


def balance_residual(role: ResourceRole, p: float, baseline: float, net: float,
                     offset: float) -> float:
    """Left minus right side of the role's balance equation; zero when it holds."""
    if role is ResourceRole.GENERATOR:
        return p - (baseline + net - offset)
    if role is ResourceRole.LOAD:
        return baseline - (p + net - offset)
    return p - (net - offset)


def ramp_coordinate(spec: ResourceSpec, p: float | np.ndarray) -> float | np.ndarray:
    """Position used by ramp limits for storage.

    Storage power lives in {0} ∪ ±[p_min, p_max]; the deadband (-p_min, p_min)
    is collapsed so that leaving idle is treated like the start-up step of
    a generator, and ramping applies to the distance travelled outside it.
    """
    p = np.asarray(p, dtype=float)
    out = np.sign(p) * np.maximum(np.abs(p) - spec.p_min, 0.0)
    return float(out) if out.ndim == 0 else out


class BaselinePolicy(str, Enum):
    AUTO = "auto"
    MIDPOINT = "midpoint"
    MIN = "min"
    MAX = "max"
    FILE = "file"


def baseline_series(spec: ResourceSpec, steps: int,
                    policy: BaselinePolicy | str = BaselinePolicy.AUTO,
                    values: Sequence[float] | None = None) -> np.ndarray:
    """Scheduled counterpart power per step (MW); zeros for storage.

    ``auto`` runs curtailment-only renewables (catalog tag ``dispatch=curtailment``)
    at ``p_max`` and every other generator or load at its midpoint.
    """
    policy = BaselinePolicy(policy)
    if spec.role is ResourceRole.STORAGE:
        return np.zeros(steps)
    if policy is BaselinePolicy.FILE:
        if values is None:
            raise ValueError("baseline policy 'file' needs a baseline series")
        arr = np.asarray(values, dtype=float)
        if arr.shape != (steps,):
            raise ValueError(f"baseline series has {arr.size} values, profile has {steps} steps")
        if np.any(arr < spec.p_min) or np.any(arr > spec.p_max):
            raise ValueError(
                f"baseline series must stay within [{spec.p_min}, {spec.p_max}] MW"
            )
        return arr.copy()
    if policy is BaselinePolicy.AUTO:
        curtail = spec.metadata.get("dispatch") == "curtailment"
        policy = BaselinePolicy.MAX if curtail else BaselinePolicy.MIDPOINT
    level = {
        BaselinePolicy.MIDPOINT: (spec.p_min + spec.p_max) / 2.0,
        BaselinePolicy.MIN: spec.p_min,
        BaselinePolicy.MAX: spec.p_max,
    }[policy]
    return np.full(steps, level)


@dataclass(frozen=True)
class DispatchConfig:
    """Solver options shared by both modes."""

    baseline_policy: BaselinePolicy = BaselinePolicy.AUTO
    baseline_values: tuple[float, ...] | None = None
    soc_enforced: bool = False
    initial_soc_fraction: float = 0.5
    initial_status: int = 1
    power_levels: int = 257
    soc_levels: int = 33

    def baseline(self, spec: ResourceSpec, steps: int) -> np.ndarray:
        return baseline_series(spec, steps, self.baseline_policy, self.baseline_values)


@dataclass
class Trajectory:
    """Per-step dispatch result.

    ``off_minutes[t]`` is the consecutive offline time (minutes) accumulated
    before step t, i.e. the OFF counter the start-up gate reads at step t.
    ``soc[t]`` is the state of charge after step t (storage runs only).
    """

    spec: ResourceSpec
    dt_minutes: int
    mode: str
    net_pu: np.ndarray
    baseline: np.ndarray
    power: np.ndarray
    status: np.ndarray
    offset: np.ndarray
    off_minutes: np.ndarray
    soc: np.ndarray | None = None
    initial_power: float = 0.0
    initial_status: int = 1
    initial_off_minutes: int = 0
    initial_soc: float | None = None
    deficit_lo: np.ndarray | None = None
    deficit_hi: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return int(self.power.size)

    @property
    def rated(self) -> float:
        return self.spec.rated_power

    @property
    def net_mw(self) -> np.ndarray:
        return self.net_pu * self.rated

    @property
    def offset_pu(self) -> np.ndarray:
        return self.offset / self.rated

    @property
    def minutes(self) -> np.ndarray:
        return np.arange(self.steps) * self.dt_minutes

    @property
    def objective(self) -> float:
        return float(np.sum(self.offset ** 2))


def net_mw(spec: ResourceSpec, profile: NetLoadProfile) -> np.ndarray:
    return profile.values * spec.rated_power
