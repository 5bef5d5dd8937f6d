"""Command line: ``run`` a scenario, ``sweep`` a grid, or print the effective ``config``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as config_mod
from .channel import InFProfile
from .config import ConfigError, ScenarioConfig, SweepConfig
from .metrics import CLASSES, DIRECTIONS
from .scenario import run_scenario, run_sweep


def _region(value: str):
    try:
        return float(value)
    except ValueError:
        return value


def _load(path: str | None) -> ScenarioConfig | SweepConfig:
    return config_mod.parse_config(path) if path else ScenarioConfig()


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if args.profile is not None:
        changes["profile"] = InFProfile.parse(args.profile)
    if args.ues is not None:
        changes["n_ues"] = args.ues
    if args.region is not None:
        changes["region"] = _region(args.region)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.duration is not None:
        changes["duration_s"] = args.duration
    if getattr(args, "traces", False):
        changes["traces"] = True
    return config_mod.validate(replace(cfg, **changes))


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="YAML config file (defaults used when omitted)")
    p.add_argument("--profile", help="InF profile: SL, DL, SH, DH or HH")
    p.add_argument("--ues", type=int, help="number of UEs")
    p.add_argument("--region", help="d1, d2, d3 or a radius in meters")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="simulated seconds")


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if isinstance(cfg, SweepConfig):
        print("config describes a sweep; use the 'sweep' command", file=sys.stderr)
        return 2
    cfg = _apply_overrides(cfg, args)
    summary = run_scenario(cfg, args.out)
    print(f"{cfg.profile.value} n_ues={cfg.n_ues} region={cfg.region_label} seed={cfg.seed} -> {args.out}")
    for d in DIRECTIONS:
        st = summary.sinr.get(d)
        rate = summary.harq_error_rate.get(d)
        print(f"  {d.value:9s} SINR mean {st.mean:7.2f} dB" if st else f"  {d.value:9s} no SINR samples", end="")
        print(f"   HARQ error rate {rate:.4f}" if rate is not None else "   HARQ error rate n/a")
        for c in CLASSES:
            ds = summary.delay.get((c, d))
            if ds:
                print(f"    {c.value:5s} n={ds.count:6d} mean {ds.mean*1e3:8.3f} ms  p99 {ds.p99*1e3:8.3f} ms  "
                      f"dropped {summary.dropped.get((c, d), 0)}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    sw = cfg if isinstance(cfg, SweepConfig) else SweepConfig(base=cfg)
    base = sw.base
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    if args.duration is not None:
        base = replace(base, duration_s=args.duration)
    sw = replace(sw, base=base)
    if args.profiles:
        sw = replace(sw, profiles=[InFProfile.parse(p) for p in args.profiles.split(",")])
    if args.ues:
        sw = replace(sw, ue_counts=[int(n) for n in args.ues.split(",")])
    if args.regions:
        sw = replace(sw, regions=[_region(r) for r in args.regions.split(",")])
    if args.repetitions is not None:
        sw = replace(sw, repetitions=args.repetitions)
    only = set(args.cell) if args.cell else None
    result = run_sweep(sw, args.out, jobs=args.jobs, only=only)
    print(f"{len(result.cells)} cells -> {Path(args.out) / 'grid.csv'}")
    for name, err in sorted(result.errors.items()):
        print(f"  FAILED {name}: {err}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_config(args) -> int:
    cfg = _load(args.config)
    sys.stdout.write(config_mod.dumps(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inf5gtsn", description="5G-TSN indoor-factory simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    _add_overrides(p)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--traces", action="store_true", help="also write egress and position traces")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run profile x UE-count x region x repetition grid")
    p.add_argument("config", nargs="?")
    p.add_argument("--out", default="sweep_out")
    p.add_argument("--jobs", type=int, default=1, help="cells run in parallel")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--duration", type=float)
    p.add_argument("--profiles", help="comma list, e.g. SL,DL,SH,DH")
    p.add_argument("--ues", help="comma list, e.g. 5,10,25,50")
    p.add_argument("--regions", help="comma list, e.g. d1,d2")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--cell", action="append", help="only (re)run this cell name; repeatable")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("config", help="print the effective configuration as YAML")
    p.add_argument("config", nargs="?")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
