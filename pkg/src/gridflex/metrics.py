"""Deficit statistics and resource rankings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .dispatch import Trajectory


@dataclass(frozen=True)
class DeficitStats:
    avg_abs: float           # mean |offset_pu|
    net_energy_signed: float  # sum offset_pu * dt, p.u.·h
    net_energy_abs: float    # sum |offset_pu| * dt, p.u.·h
    rms: float               # sqrt(mean offset_pu**2)
    horizon_hours: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def stats_from_series(offset_pu: Sequence[float] | np.ndarray, dt_minutes: float) -> DeficitStats:
    x = np.asarray(offset_pu, dtype=float)
    if x.size == 0:
        raise ValueError("cannot compute statistics of an empty trajectory")
    hours = dt_minutes / 60.0
    return DeficitStats(
        avg_abs=float(np.mean(np.abs(x))),
        net_energy_signed=float(np.sum(x) * hours),
        net_energy_abs=float(np.sum(np.abs(x)) * hours),
        rms=float(math.sqrt(np.mean(x * x))),
        horizon_hours=x.size * hours,
    )


def compute_stats(trajectory: Trajectory, dt_minutes: float | None = None) -> DeficitStats:
    dt = trajectory.dt_minutes if dt_minutes is None else dt_minutes
    return stats_from_series(trajectory.offset_pu, dt)


def rank_resources(stats: Mapping[str, DeficitStats]) -> list[tuple[str, DeficitStats]]:
    """Order by rms, then net_energy_abs, then name (all ascending)."""
    if len(stats) < 2:
        raise ValueError(f"ranking needs at least 2 resources, got {len(stats)}")
    return sorted(stats.items(), key=lambda kv: (kv[1].rms, kv[1].net_energy_abs, kv[0]))


REPORT_COLUMNS = ["rank", "resource", "avg_abs_deficit", "net_energy_deficit_abs",
                  "net_energy_deficit_signed", "rms_deficit"]


def report_csv(ranked: list[tuple[str, DeficitStats]], scenario: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario"] + REPORT_COLUMNS)
    for i, (name, s) in enumerate(ranked, start=1):
        writer.writerow([scenario, i, name] + [format(v, ".17g") for v in
                        (s.avg_abs, s.net_energy_abs, s.net_energy_signed, s.rms)])
    return buf.getvalue()


def report_text(rows: list[tuple[str, DeficitStats]], title: str) -> str:
    """Aligned table at table precision (4 significant digits)."""
    head = ["Resource", "Average Absolute Deficit", "Net Energy Deficit", "Root Mean Squared Deficit"]
    body = [[name, f"{s.avg_abs:.4g}", f"{s.net_energy_abs:.4g}", f"{s.rms:.4g}"] for name, s in rows]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    line = lambda r: "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                               for i, (c, w) in enumerate(zip(r, widths)))
    out = [title, line(head), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in body]
    return "\n".join(out) + "\n"
