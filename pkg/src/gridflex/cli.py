"""Command-line entry point.

Exit codes: 0 ok, 2 invalid input, 3 infeasible schedule, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .audit import OptimalityReport, oracle_campaign, realtime_optimality_audit
from .catalog import (
    CatalogFormatError,
    ResourceRole,
    ResourceSpec,
    UnknownResourceError,
    builtin_catalog,
    catalog_csv,
    lookup,
    read_catalog,
    validate_spec,
    write_catalog,
)
from .dayahead import DEFAULT_DT_MINUTES, InfeasibleScheduleError, run_dayahead
from .dispatch import BaselinePolicy, DispatchConfig, Trajectory
from .metrics import DeficitStats, compute_stats, rank_resources, report_csv, report_text
from .realtime import run_realtime
from .scenario import (
    NetLoadProfile,
    ProfileError,
    ProfileKind,
    builtin_profile,
    load_profile_csv,
    write_profile_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_ORACLE = 4

MODES = ("realtime", "dayahead")
TRAJECTORY_COLUMNS = ["minute", "net_pu", "power_MW", "status", "offset_MW", "offset_pu", "soc_MWh"]


class ConfigError(ValueError):
    pass


def default_mode(kind: ProfileKind) -> str:
    """Peak shaving is scheduled ahead; the other scenarios are unforeseen."""
    return "dayahead" if kind is ProfileKind.PEAK_SHAVING else "realtime"


def simulate(spec: ResourceSpec, profile: NetLoadProfile, mode: str,
             config: DispatchConfig) -> Trajectory:
    if mode == "realtime":
        return run_realtime(spec, profile, config)
    if mode == "dayahead":
        return run_dayahead(spec, profile, config)
    raise ConfigError(f"unknown mode {mode!r}")


@dataclass
class ScenarioConfig:
    resource: str
    scenario: str
    dt_minutes: int | None = None
    seed: int = 0
    baseline_policy: str = "auto"
    baseline_file: str | None = None
    mode: str | None = None
    soc_enforced: bool = False
    power_levels: int = 257
    soc_levels: int = 33
    initial_soc_fraction: float = 0.5
    out_dir: str = "."

    def resolve_spec(self) -> ResourceSpec:
        path = Path(self.resource)
        if path.suffix.lower() == ".csv" or path.is_file():
            if not path.is_file():
                raise ConfigError(f"resource: spec file {self.resource!r} does not exist")
            try:
                specs = read_catalog(path)
            except CatalogFormatError as exc:
                raise ConfigError(f"resource: {exc}") from None
            if len(specs) != 1:
                raise ConfigError(f"resource: spec file must hold exactly one record, found {len(specs)}")
            return specs[0]
        try:
            return lookup(self.resource)
        except UnknownResourceError:
            raise ConfigError(f"resource: unknown resource {self.resource!r}") from None

    def resolve_profile(self) -> NetLoadProfile:
        try:
            kind = ProfileKind(self.scenario)
        except ValueError:
            kind = None
        if kind is None or kind is ProfileKind.CUSTOM:
            path = Path(self.scenario)
            if not path.is_file():
                raise ConfigError(
                    f"scenario: {self.scenario!r} is neither a built-in kind "
                    f"({', '.join(k.value for k in ProfileKind if k is not ProfileKind.CUSTOM)}) "
                    "nor an existing profile file"
                )
            try:
                profile = load_profile_csv(path)
            except ProfileError as exc:
                raise ConfigError(f"scenario: {exc}") from None
            if self.dt_minutes is not None and self.dt_minutes != profile.dt_minutes:
                raise ConfigError(
                    f"dt: profile file has dt={profile.dt_minutes} min, --dt says {self.dt_minutes}"
                )
            return profile
        dt = self.dt_minutes
        if dt is None:
            dt = DEFAULT_DT_MINUTES if self.resolved_mode(kind) == "dayahead" else 1
        try:
            return builtin_profile(kind, dt, seed=self.seed)
        except ProfileError as exc:
            raise ConfigError(f"dt: {exc}") from None

    def resolved_mode(self, kind: ProfileKind) -> str:
        mode = self.mode or default_mode(kind)
        if mode not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}, got {mode!r}")
        return mode

    def dispatch_config(self, spec: ResourceSpec, steps: int) -> DispatchConfig:
        try:
            policy = BaselinePolicy(self.baseline_policy)
        except ValueError:
            raise ConfigError(f"baseline: unknown policy {self.baseline_policy!r}") from None
        values = None
        if policy is BaselinePolicy.FILE:
            if not self.baseline_file or not Path(self.baseline_file).is_file():
                raise ConfigError(f"baseline-file: {self.baseline_file!r} does not exist")
            try:
                values = tuple(load_profile_csv(self.baseline_file).values.tolist())
            except ProfileError as exc:
                raise ConfigError(f"baseline-file: {exc}") from None
        if self.power_levels < 2:
            raise ConfigError(f"power-levels: must be >= 2, got {self.power_levels}")
        if not 0.0 <= self.initial_soc_fraction <= 1.0:
            raise ConfigError("initial-soc: must lie in [0, 1]")
        config = DispatchConfig(
            baseline_policy=policy,
            baseline_values=values,
            soc_enforced=self.soc_enforced,
            initial_soc_fraction=self.initial_soc_fraction,
            power_levels=self.power_levels,
            soc_levels=self.soc_levels,
        )
        try:
            config.baseline(spec, steps)
        except ValueError as exc:
            raise ConfigError(f"baseline: {exc}") from None
        return config

    def echo(self, spec: ResourceSpec, profile: NetLoadProfile, mode: str) -> dict:
        return {
            "resource": spec.name,
            "resource_source": self.resource,
            "scenario": profile.kind.value if profile.kind is not ProfileKind.CUSTOM else self.scenario,
            "seed": self.seed,
            "dt_minutes": profile.dt_minutes,
            "mode": mode,
            "baseline_policy": self.baseline_policy,
            "baseline_file": self.baseline_file,
            "soc_enforced": bool(self.soc_enforced and spec.is_storage),
            "initial_soc_fraction": self.initial_soc_fraction,
            "power_levels": self.power_levels if mode == "dayahead" else None,
            "soc_levels": self.soc_levels if mode == "dayahead" and self.soc_enforced else None,
            "spec": {
                "role": spec.role.value, "p_min_MW": spec.p_min, "p_max_MW": spec.p_max,
                "ramp_MW_per_min": spec.ramp, "startup_min": spec.startup_minutes,
                "charge_eff": spec.charge_eff, "discharge_eff": spec.discharge_eff,
                "energy_cap_MWh": spec.energy_cap,
            },
        }


def _g(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(tr: Trajectory, path: Path) -> None:
    cols = TRAJECTORY_COLUMNS if tr.soc is not None else TRAJECTORY_COLUMNS[:-1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        off_pu = tr.offset_pu
        for t in range(tr.steps):
            row = [int(t * tr.dt_minutes), _g(tr.net_pu[t]), _g(tr.power[t]), int(tr.status[t]),
                   _g(tr.offset[t]), _g(off_pu[t])]
            if tr.soc is not None:
                row.append(_g(tr.soc[t]))
            w.writerow(row)


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


def _dump_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_run(cfg: ScenarioConfig) -> int:
    spec = cfg.resolve_spec()
    report = validate_spec(spec)
    if report:
        raise ConfigError("resource: " + "; ".join(report))
    profile = cfg.resolve_profile()
    kind = profile.kind
    mode = cfg.resolved_mode(kind)
    config = cfg.dispatch_config(spec, profile.steps)
    tr = simulate(spec, profile, mode, config)
    stats = compute_stats(tr)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{_slug(spec.name)}_{_slug(cfg.echo(spec, profile, mode)['scenario'])}_{mode}"
    traj_path = out / f"{stem}_trajectory.csv"
    stats_path = out / f"{stem}_stats.json"
    write_trajectory_csv(tr, traj_path)
    payload = {
        "stats": stats.as_dict(),
        "objective_MW2": tr.objective,
        "config": cfg.echo(spec, profile, mode),
        "version": __version__,
    }
    _dump_json(payload, stats_path)
    print(f"{spec.name} / {payload['config']['scenario']} ({mode}, dt={profile.dt_minutes} min): "
          f"avg_abs={stats.avg_abs:.4g} net_abs={stats.net_energy_abs:.4g} rms={stats.rms:.4g}")
    print(f"wrote {traj_path}")
    print(f"wrote {stats_path}")
    return EXIT_OK


_GROUPS = {
    "generators": ResourceRole.GENERATOR,
    "loads": ResourceRole.LOAD,
    "storage": ResourceRole.STORAGE,
}


def _resolve_resource_list(names: list[str]) -> list[str]:
    out: list[str] = []
    for item in names:
        for name in filter(None, (x.strip() for x in item.split(","))):
            if name.lower() == "all":
                out += [s.name for s in builtin_catalog()]
            elif name.lower() in _GROUPS:
                out += [s.name for s in builtin_catalog() if s.role is _GROUPS[name.lower()]]
            else:
                out.append(name)
    return out


def cmd_compare(base: ScenarioConfig, resources: list[str], scenarios: list[str], jobs: int = 1) -> int:
    names = _resolve_resource_list(resources)
    if len(names) < 2:
        raise ConfigError(f"resources: compare needs at least 2 resources, got {len(names)}")
    if len(set(names)) != len(names):
        raise ConfigError("resources: duplicate entries")
    out = Path(base.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"scenarios": {}, "version": __version__}
    for scenario in scenarios:
        cfgs = [ScenarioConfig(**{**base.__dict__, "resource": n, "scenario": scenario}) for n in names]
        prepared = []
        for c in cfgs:
            spec = c.resolve_spec()
            profile = c.resolve_profile()
            mode = c.resolved_mode(profile.kind)
            prepared.append((c, spec, profile, mode, c.dispatch_config(spec, profile.steps)))

        def work(item):
            _, spec, profile, mode, config = item
            return compute_stats(simulate(spec, profile, mode, config))

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(work, prepared))
        else:
            results = [work(item) for item in prepared]
        rows = [(spec.name, st) for (_, spec, _, _, _), st in zip(prepared, results)]
        ranked = rank_resources(dict(rows))
        label = prepared[0][0].echo(prepared[0][1], prepared[0][2], prepared[0][3])["scenario"]
        modes = sorted({m for _, _, _, m, _ in prepared})
        dts = sorted({p.dt_minutes for _, _, p, _, _ in prepared})
        title = (f"Power deficit statistics, scenario={label}, mode={'/'.join(modes)}, "
                 f"dt={'/'.join(map(str, dts))} min, baseline={base.baseline_policy}, "
                 f"soc_enforced={base.soc_enforced}")
        text = report_text(rows, title) + "\nRanking (rms, then net energy, then name):\n"
        text += "".join(f"{i:2d}. {n}\n" for i, (n, _) in enumerate(ranked, start=1))
        (out / f"compare_{_slug(label)}.csv").write_text(report_csv(ranked, label), encoding="utf-8")
        (out / f"compare_{_slug(label)}.txt").write_text(text, encoding="utf-8")
        summary["scenarios"][label] = {
            "mode": modes, "dt_minutes": dts,
            "table": [{"resource": n, **s.as_dict()} for n, s in rows],
            "ranking": [n for n, _ in ranked],
        }
        print(text)
    summary["config"] = {"seed": base.seed, "baseline_policy": base.baseline_policy,
                         "soc_enforced": base.soc_enforced, "power_levels": base.power_levels,
                         "mode": base.mode, "dt_minutes": base.dt_minutes, "resources": names}
    _dump_json(summary, out / "compare_summary.json")
    return EXIT_OK


def cmd_oracle_check(instances: int, max_steps: int, max_levels: int, max_startup: int,
                     seed: int, fault: bool = False) -> int:
    if max_steps < 1 or max_steps > 10:
        raise ConfigError(f"max-steps: must be in 1..10, got {max_steps}")
    if max_levels < 2 or max_levels > 8:
        raise ConfigError(f"max-levels: must be in 2..8, got {max_levels}")
    if instances < 1:
        raise ConfigError("instances: must be >= 1")
    if max_startup < 0:
        raise ConfigError("max-startup: must be >= 0")
    res = oracle_campaign(instances, seed, max_steps, max_levels, max_startup, fault=fault)
    print(f"dp-vs-oracle: {res.instances} instances ({res.infeasible} infeasible on both sides), "
          f"{len(res.mismatches)} mismatches, worst discrepancy {res.worst_discrepancy:.3g}, "
          f"{len(res.audit_failures)} constraint-audit failures")
    rep = OptimalityReport()
    profile = builtin_profile(ProfileKind.INTERMITTENCY, 1, seed=seed)
    for spec in builtin_catalog():
        realtime_optimality_audit(run_realtime(spec, profile), report=rep, cache={})
    print(f"realtime projection audit: {rep.steps_checked} steps, {len(rep.failures)} failures, "
          f"worst gain {rep.worst_gain:.3g} p.u.^2")
    ok = res.passed and rep.passed
    for line in res.mismatches + res.audit_failures + rep.failures:
        print("FAIL", line)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_catalog_list(fmt: str) -> int:
    specs = builtin_catalog()
    if fmt == "csv":
        sys.stdout.write(catalog_csv(specs))
        return EXIT_OK
    head = ["name", "role", "p_min [MW]", "p_max [MW]", "ramp [MW/min]", "t_SU [min]",
            "eta_ch", "eta_dis", "E_cap [MWh]"]
    rows = [[s.name, s.role.value, f"{s.p_min:g}", f"{s.p_max:g}", f"{s.ramp:g}",
             str(s.startup_minutes), "" if s.charge_eff is None else f"{s.charge_eff:g}",
             "" if s.discharge_eff is None else f"{s.discharge_eff:g}",
             "" if s.energy_cap is None else f"{s.energy_cap:g}"] for s in specs]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    for r in [head] + rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


def _default_seed() -> int:
    env = os.environ.get("GRIDFLEX_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"GRIDFLEX_SEED must be an integer, got {env!r}") from None


def _add_run_options(p: argparse.ArgumentParser, many: bool = False) -> None:
    p.add_argument("--scenario", required=True, nargs="+" if many else None,
                   help="intermittency | peak-shaving | energy-reserve | path to profile CSV")
    p.add_argument("--mode", choices=MODES, default=None,
                   help="default: dayahead for peak-shaving, realtime otherwise")
    p.add_argument("--dt", type=int, default=None, help="interval length in minutes")
    p.add_argument("--seed", type=int, default=None, help="profile seed (env GRIDFLEX_SEED)")
    p.add_argument("--baseline", default="auto", help="auto | midpoint | min | max | file")
    p.add_argument("--baseline-file", default=None, help="CSV (minute, MW) used with --baseline file")
    p.add_argument("--soc-enforced", action="store_true", help="bind storage state of charge")
    p.add_argument("--initial-soc", type=float, default=0.5, help="initial SoC fraction")
    p.add_argument("--power-levels", type=int, default=257, help="day-ahead grid size N")
    p.add_argument("--soc-levels", type=int, default=33, help="day-ahead SoC grid size")
    p.add_argument("--out-dir", default=".", help="directory for output files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridflex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gridflex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    cat = sub.add_parser("catalog", help="built-in resource catalog")
    cat_sub = cat.add_subparsers(dest="catalog_command", required=True)
    lst = cat_sub.add_parser("list", help="print the catalog")
    lst.add_argument("--format", choices=("text", "csv"), default="text")
    exp = cat_sub.add_parser("export", help="write the catalog file")
    exp.add_argument("--out", required=True)

    scen = sub.add_parser("scenario", help="net-load profiles")
    scen_sub = scen.add_subparsers(dest="scenario_command", required=True)
    emit = scen_sub.add_parser("emit", help="write a built-in profile as CSV")
    emit.add_argument("--kind", required=True,
                      choices=[k.value for k in ProfileKind if k is not ProfileKind.CUSTOM])
    emit.add_argument("--dt", type=int, default=1)
    emit.add_argument("--seed", type=int, default=None)
    emit.add_argument("--out", required=True)

    run = sub.add_parser("run", help="dispatch one resource against one scenario")
    run.add_argument("--resource", required=True, help="catalog name or single-record spec file")
    _add_run_options(run)

    cmp_ = sub.add_parser("compare", help="rank several resources per scenario")
    cmp_.add_argument("--resources", nargs="+", required=True,
                      help="names (comma or space separated), or generators | loads | storage | all")
    _add_run_options(cmp_, many=True)
    cmp_.add_argument("--jobs", type=int, default=1, help="parallel simulations")

    orc = sub.add_parser("oracle-check", help="DP vs brute force and real-time projection audit")
    orc.add_argument("--instances", type=int, default=100)
    orc.add_argument("--max-steps", type=int, default=8)
    orc.add_argument("--max-levels", type=int, default=7)
    orc.add_argument("--max-startup", type=int, default=3)
    orc.add_argument("--seed", type=int, default=None)
    orc.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _scenario_config(args: argparse.Namespace, resource: str, scenario: str, seed: int) -> ScenarioConfig:
    return ScenarioConfig(
        resource=resource,
        scenario=scenario,
        dt_minutes=args.dt,
        seed=seed,
        baseline_policy=args.baseline,
        baseline_file=args.baseline_file,
        mode=args.mode,
        soc_enforced=args.soc_enforced,
        power_levels=args.power_levels,
        soc_levels=args.soc_levels,
        initial_soc_fraction=args.initial_soc,
        out_dir=args.out_dir,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed = args.seed if getattr(args, "seed", None) is not None else _default_seed()
        if args.command == "catalog":
            if args.catalog_command == "list":
                return cmd_catalog_list(args.format)
            write_catalog(builtin_catalog(), args.out)
            print(f"wrote {args.out}")
            return EXIT_OK
        if args.command == "scenario":
            try:
                profile = builtin_profile(args.kind, args.dt, seed=seed)
            except ProfileError as exc:
                raise ConfigError(f"dt: {exc}") from None
            write_profile_csv(profile, args.out)
            print(f"wrote {args.out} ({profile.steps} rows, dt={profile.dt_minutes} min)")
            return EXIT_OK
        if args.command == "run":
            return cmd_run(_scenario_config(args, args.resource, args.scenario, seed))
        if args.command == "compare":
            base = _scenario_config(args, "", "", seed)
            return cmd_compare(base, args.resources, args.scenario, jobs=args.jobs)
        if args.command == "oracle-check":
            return cmd_oracle_check(args.instances, args.max_steps, args.max_levels,
                                    args.max_startup, seed, fault=args.inject_fault)
    except ConfigError as exc:
        print(f"gridflex: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleScheduleError as exc:
        print(f"gridflex: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    parser.error(f"unhandled command {args.command!r}")
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
