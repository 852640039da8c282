"""State-of-charge bookkeeping for storage resources.

Sign convention: positive power discharges, negative power charges.
Discharged energy is divided by the discharge efficiency (more leaves the
store than reaches the grid); charged energy is multiplied by the charge
efficiency.
"""

from __future__ import annotations

import math

from .catalog import ResourceRole, ResourceSpec


def _require_storage(spec: ResourceSpec) -> None:
    if spec.role is not ResourceRole.STORAGE:
        raise ValueError(f"{spec.name} is a {spec.role.value}, not a storage resource")


def apply_soc(soc: float, p: float, dt_minutes: float, spec: ResourceSpec) -> float:
    """State of charge after holding power ``p`` for one interval. Not clamped."""
    _require_storage(spec)
    hours = dt_minutes / 60.0
    if p > 0:
        return soc - p * hours / spec.discharge_eff
    if p < 0:
        return soc - p * hours * spec.charge_eff
    return soc


def soc_power_limits(soc: float, spec: ResourceSpec, dt_minutes: float) -> tuple[float, float]:
    """Signed power range ``(p_lo, p_hi)`` that keeps the next SoC within [0, energy_cap]."""
    _require_storage(spec)
    p_hi = min(spec.p_max, max(soc, 0.0) * spec.discharge_eff * 60.0 / dt_minutes)
    headroom = max(spec.energy_cap - soc, 0.0)
    p_lo = -min(spec.p_max, headroom * 60.0 / (dt_minutes * spec.charge_eff))
    return p_lo, p_hi


def ramp_down_energy(p: float, spec: ResourceSpec, dt_minutes: float) -> float:
    """Grid-side energy (MWh) moved while ramping from ``p`` back to idle as fast as allowed.

    Counts the intervals after the current one; the last of them lands on 0.
    Magnitude only; the caller applies the efficiency for the direction.
    """
    phi = abs(p) - spec.p_min
    step = dt_minutes * spec.ramp
    if phi <= 0 or step <= 0:
        return 0.0
    m = math.ceil(phi / step) - 1
    return (m * (spec.p_min + phi) - step * m * (m + 1) / 2.0) * dt_minutes / 60.0


def viable_power_limits(soc: float, spec: ResourceSpec, dt_minutes: float) -> tuple[float, float]:
    """Like :func:`soc_power_limits`, but also keeps enough energy (or headroom)
    to ramp back to idle afterwards without leaving [0, energy_cap].
    """
    p_lo, p_hi = soc_power_limits(soc, spec, dt_minutes)
    hours = dt_minutes / 60.0

    def spare_discharge(p: float) -> float:
        return soc - (p * hours + ramp_down_energy(p, spec, dt_minutes)) / spec.discharge_eff

    def spare_charge(p: float) -> float:
        return spec.energy_cap - soc - (p * hours + ramp_down_energy(p, spec, dt_minutes)) * spec.charge_eff

    return -_largest_viable(-p_lo, spare_charge), _largest_viable(p_hi, spare_discharge)


def _largest_viable(limit: float, spare) -> float:
    """Largest magnitude in [0, limit] with non-negative spare energy (spare is decreasing)."""
    if limit <= 0 or spare(limit) >= 0:
        return max(limit, 0.0)
    lo, hi = 0.0, limit
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if spare(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo
