"""Resource specifications and the built-in parameter tables.

Every resource is described by its physical envelope: operating range
(``p_min``..``p_max``), ramping rate, start-up time and, for storage, the
charge/discharge efficiencies and energy capacity. All powers are MW, ramps
MW/min, times minutes, energy MWh. The rated power used for per-unit
normalization is ``p_max``.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping


class ResourceRole(str, Enum):
    GENERATOR = "generator"
    LOAD = "load"
    STORAGE = "storage"


@dataclass(frozen=True, eq=True)
class ResourceSpec:
    """Physical envelope of one flexible resource.

    Attributes:
        role: Generator, load or storage.
        name: Identifier used for lookup and in reports.
        p_min: Minimum power while online [MW].
        p_max: Maximum power [MW]; also the per-unit base.
        ramp: Ramping rate [MW/min].
        startup_minutes: Minimum consecutive offline time before restart [min].
        charge_eff: Storage charging efficiency, storage only.
        discharge_eff: Storage discharging efficiency, storage only.
        energy_cap: Storage energy capacity [MWh], storage only.
        metadata: Informational tags; never read by the solvers except for
            the ``dispatch`` tag consulted by the automatic baseline policy.
    """

    role: ResourceRole
    name: str
    p_min: float
    p_max: float
    ramp: float
    startup_minutes: int
    charge_eff: float | None = None
    discharge_eff: float | None = None
    energy_cap: float | None = None
    metadata: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    @property
    def rated_power(self) -> float:
        return self.p_max

    @property
    def is_storage(self) -> bool:
        return self.role is ResourceRole.STORAGE

    def scaled(self, factor: float) -> "ResourceSpec":
        """Copy with every MW / MWh quantity multiplied by ``factor``."""
        return ResourceSpec(
            role=self.role,
            name=self.name,
            p_min=self.p_min * factor,
            p_max=self.p_max * factor,
            ramp=self.ramp * factor,
            startup_minutes=self.startup_minutes,
            charge_eff=self.charge_eff,
            discharge_eff=self.discharge_eff,
            energy_cap=None if self.energy_cap is None else self.energy_cap * factor,
            metadata=dict(self.metadata),
        )


def rated_power(spec: ResourceSpec) -> float:
    return spec.p_max


def validate_spec(spec: ResourceSpec) -> list[str]:
    """Return one message per violated invariant; empty when the spec is valid."""
    problems: list[str] = []
    numeric = {
        "p_min": spec.p_min,
        "p_max": spec.p_max,
        "ramp": spec.ramp,
        "startup_minutes": spec.startup_minutes,
    }
    for key, value in numeric.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append(f"{key} must be a finite number, got {value!r}")
    if problems:
        return problems

    if not isinstance(spec.role, ResourceRole):
        problems.append(f"role must be a ResourceRole, got {spec.role!r}")
    if not spec.name:
        problems.append("name must be non-empty")
    if spec.p_min < 0:
        problems.append("0 ≤ p_min violated")
    if spec.p_max <= 0:
        problems.append("p_max > 0 violated")
    if spec.p_min > spec.p_max:
        problems.append("p_min ≤ p_max violated")
    if spec.ramp <= 0:
        problems.append("ramp > 0 violated")
    if spec.startup_minutes < 0 or int(spec.startup_minutes) != spec.startup_minutes:
        problems.append("startup_minutes must be a non-negative integer")

    storage_fields = {
        "charge_eff": spec.charge_eff,
        "discharge_eff": spec.discharge_eff,
        "energy_cap": spec.energy_cap,
    }
    if spec.role is ResourceRole.STORAGE:
        for key, value in storage_fields.items():
            if value is None:
                problems.append(f"role/field mismatch: storage resource requires {key}")
        for key in ("charge_eff", "discharge_eff"):
            value = storage_fields[key]
            if value is not None and not (0 < value <= 1):
                problems.append(f"{key} must lie in (0, 1]")
        if spec.energy_cap is not None and not spec.energy_cap > 0:
            problems.append("energy_cap > 0 violated")
    else:
        for key, value in storage_fields.items():
            if value is not None:
                problems.append(
                    f"role/field mismatch: {spec.role.value} resource must not carry {key}"
                )
    return problems


class UnknownResourceError(KeyError):
    pass


# Load figures are kept in kW as published and divided by 1000 on construction.
_LOADS_KW = [
    # name, p_min kW, p_max kW, ramp kW/min, response time min, category, energy intensity
    ("Refrigeration", 180.0, 360.0, 180.0, 10, "TCL", "31596.66 kWh/°C"),
    ("HVAC", 4.5, 7.2, 7.2, 1, "TCL", "2.5 kWh/°C"),
    ("Cement Production", 138.0, 2370.0, 27.18, 10, "Industrial Process", "3.58 kWh/ton"),
    ("Oil Refinement", 25000.0, 35000.0, 83.33, 240, "Industrial Process", "0.025 kWh/kg"),
    ("Data Center", 1250.0, 5000.0, 333.33, 15, "IT Industry", "5.29e-13 Wh/CPU cycle"),
]

_ALIASES = {
    "solar": "Solar PV",
    "solarpower": "Solar PV",
    "solarpvsystem": "Solar PV",
    "wind": "Wind Turbines",
    "windpower": "Wind Turbines",
    "windturbine": "Wind Turbines",
    "hydro": "Hydropower",
    "refrigeratedwarehouse": "Refrigeration",
    "cement": "Cement Production",
    "cementplant": "Cement Production",
    "oilrefinementplant": "Oil Refinement",
    "oilrefinery": "Oil Refinement",
    "datacentre": "Data Center",
    "bess": "Battery",
    "phs": "Pumped Hydro",
    "pumpedhydrostorage": "Pumped Hydro",
    "lhs": "Latent Heat",
    "latentheatstorage": "Latent Heat",
}


def _generators() -> list[ResourceSpec]:
    g = ResourceRole.GENERATOR
    return [
        ResourceSpec(g, "CCGT", 240.0, 800.0, 24.0, 180,
                     metadata={"category": "Thermal Generator", "efficiency": "0.5"}),
        ResourceSpec(g, "ICE", 1.8, 18.0, 3.6, 5,
                     metadata={"category": "Thermal Generator", "efficiency": "0.48"}),
        ResourceSpec(g, "Hydropower", 60.0, 1900.0, 50.0, 1,
                     metadata={"category": "Renewable Generator", "efficiency": "0.9"}),
        ResourceSpec(g, "Solar PV", 0.0, 1.3, 1000.0, 1,
                     metadata={"category": "Renewable Generator", "efficiency": "0.198",
                               "dispatch": "curtailment"}),
        ResourceSpec(g, "Wind Turbines", 0.0086, 1.3, 2.6, 1,
                     metadata={"category": "Renewable Generator", "efficiency": "0.1626",
                               "dispatch": "curtailment"}),
    ]


def _loads() -> list[ResourceSpec]:
    return [
        ResourceSpec(ResourceRole.LOAD, name, lo / 1000.0, hi / 1000.0, ramp / 1000.0, resp,
                     metadata={"category": cat, "energy_intensity": intensity})
        for name, lo, hi, ramp, resp, cat, intensity in _LOADS_KW
    ]


def _storage() -> list[ResourceSpec]:
    s = ResourceRole.STORAGE
    return [
        ResourceSpec(s, "Battery", 0.1, 100.0, 6000.0, 0, 0.9, 0.97, 400.0,
                     metadata={"category": "Electrochemical Energy Storage"}),
        ResourceSpec(s, "Pumped Hydro", 100.0, 5000.0, 50.0, 1, 0.7, 0.85, 8000.0,
                     metadata={"category": "Mechanical Energy Storage"}),
        ResourceSpec(s, "Flywheel", 0.0, 1.0, 15.0, 0, 0.98, 0.98, 0.25,
                     metadata={"category": "Mechanical Energy Storage",
                               "response_duration": "8 sec - 15 min"}),
        ResourceSpec(s, "Latent Heat", 0.1, 300.0, 0.48, 60, 0.75, 0.90, 2500.0,
                     metadata={"category": "Thermal Energy Storage"}),
    ]


def builtin_catalog() -> list[ResourceSpec]:
    """The 14 parameterized resources: 5 generators, 5 loads, 4 storage units."""
    return _generators() + _loads() + _storage()


def _key(name: str) -> str:
    return re.sub(r"[^a-z0-9]", "", name.lower())


def lookup(name: str, catalog: Iterable[ResourceSpec] | None = None) -> ResourceSpec:
    """Find a resource by name, ignoring case, spaces and punctuation.

    A handful of aliases used in result tables ("Solar", "PHS", ...) are
    accepted for the built-in catalog.
    """
    specs = list(builtin_catalog() if catalog is None else catalog)
    by_key = {_key(s.name): s for s in specs}
    k = _key(name)
    if k in by_key:
        return by_key[k]
    alias = _ALIASES.get(k)
    if alias is not None and _key(alias) in by_key:
        return by_key[_key(alias)]
    raise UnknownResourceError(f"unknown resource {name!r}")


# Column order of the catalog file; units are part of the header names.
CATALOG_COLUMNS = [
    "name",
    "role",
    "p_min_MW",
    "p_max_MW",
    "ramp_MW_per_min",
    "startup_min",
    "charge_eff",
    "discharge_eff",
    "energy_cap_MWh",
    "metadata",
]


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".17g")


def catalog_csv(specs: Iterable[ResourceSpec]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CATALOG_COLUMNS)
    for s in specs:
        meta = ";".join(f"{k}={v}" for k, v in sorted(s.metadata.items()))
        writer.writerow([
            s.name, s.role.value, _fmt(s.p_min), _fmt(s.p_max), _fmt(s.ramp),
            str(int(s.startup_minutes)), _fmt(s.charge_eff), _fmt(s.discharge_eff),
            _fmt(s.energy_cap), meta,
        ])
    return buf.getvalue()


def write_catalog(specs: Iterable[ResourceSpec], path: str | Path) -> None:
    Path(path).write_text(catalog_csv(specs), encoding="utf-8")


class CatalogFormatError(ValueError):
    pass


def read_catalog(path: str | Path) -> list[ResourceSpec]:
    """Parse a catalog file written by :func:`write_catalog`.

    Raises CatalogFormatError naming the row and column of the first bad cell,
    or the first spec that fails validation.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CatalogFormatError(f"{path}: empty catalog file")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in CATALOG_COLUMNS[:6] if c not in header]
    if missing:
        raise CatalogFormatError(f"{path}: missing columns {missing}")
    col = {name: i for i, name in enumerate(header)}

    def cell(row: list[str], name: str) -> str:
        i = col.get(name)
        return row[i].strip() if i is not None and i < len(row) else ""

    specs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue

        def num(name: str, optional: bool = False) -> float | None:
            text = cell(row, name)
            if text == "" and optional:
                return None
            try:
                return float(text)
            except ValueError:
                raise CatalogFormatError(
                    f"{path}: line {lineno}, column {name!r}: not a number: {text!r}"
                ) from None

        try:
            role = ResourceRole(cell(row, "role").lower())
        except ValueError:
            raise CatalogFormatError(
                f"{path}: line {lineno}, column 'role': unknown role {cell(row, 'role')!r}"
            ) from None
        startup = num("startup_min")
        meta: dict[str, str] = {}
        for item in filter(None, cell(row, "metadata").split(";")):
            k, _, v = item.partition("=")
            meta[k] = v
        spec = ResourceSpec(
            role=role,
            name=cell(row, "name"),
            p_min=num("p_min_MW"),
            p_max=num("p_max_MW"),
            ramp=num("ramp_MW_per_min"),
            startup_minutes=int(startup) if startup is not None and startup.is_integer() else startup,
            charge_eff=num("charge_eff", optional=True),
            discharge_eff=num("discharge_eff", optional=True),
            energy_cap=num("energy_cap_MWh", optional=True),
            metadata=meta,
        )
        report = validate_spec(spec)
        if report:
            raise CatalogFormatError(f"{path}: line {lineno}: " + "; ".join(report))
        specs.append(spec)
    return specs
