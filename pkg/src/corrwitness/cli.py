"""Command-line front end.

    corrwitness sweep --preset fig2-sin --out fig2.csv
    corrwitness tomo  --preset fig3-left --seed 7
    corrwitness bound --config my.cfg --random_phases 20
    corrwitness presets list

Exit codes: 0 success, 2 configuration or I/O error, 3 numerical
consistency failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import config as cfgmod
from .photon import ConsistencyError

log = logging.getLogger("corrwitness")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="sectioned key=value config file")
    p.add_argument("--preset", metavar="NAME", help="start from a named preset")
    group = p.add_argument_group("overrides", "any config key, applied after --preset and --config")
    for key in cfgmod.KEYS:
        group.add_argument(f"--{key}", dest=f"ov_{key}", metavar="VALUE", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrwitness", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("sweep", "trace-distance sweep over the evolution slope a"),
                        ("tomo", "simulate and ML-reconstruct two-qubit tomography at tomo_a"),
                        ("bound", "initial-information bound demonstration")):
        _add_common(sub.add_parser(name, help=help_))
    pre = sub.add_parser("presets", help="list, show or run embedded presets")
    pre_sub = pre.add_subparsers(dest="action", required=True)
    pre_sub.add_parser("list")
    show = pre_sub.add_parser("show")
    show.add_argument("name")
    run = pre_sub.add_parser("run")
    run.add_argument("name")
    run.add_argument("--seed", dest="ov_seed", default=None)
    run.add_argument("--out", dest="ov_out", default=None)
    return parser


def resolve_config(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.ExperimentConfig()
    if getattr(args, "preset", None):
        _, cfg = cfgmod.preset(args.preset)
    if getattr(args, "config", None):
        cfg = cfgmod.load(args.config, base=cfg)
    overrides = {k[3:]: v for k, v in vars(args).items() if k.startswith("ov_")}
    return cfgmod.apply_overrides(cfg, overrides)


def _run(command: str, cfg) -> dict:
    from . import pipeline

    if command == "sweep":
        return pipeline.run_sweep(cfg)
    if command == "tomo":
        return pipeline.run_tomography(cfg)
    return pipeline.run_bound_demo(cfg)


def _summary(command: str, fields: dict) -> str:
    keys = {
        "sweep": ("initial_D", "max_D", "argmax_a", "increase_detected", "bound_satisfied", "semigroup_violated"),
        "tomo": ("visibility", "visibility_true", "converged", "iterations"),
        "bound": ("i12_bound", "max_increase", "margin", "random_min_margin"),
    }[command]
    return "  ".join(f"{k}={fields[k]}" for k in keys if k in fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        if args.command == "presets":
            if args.action == "list":
                for name, desc in cfgmod.PRESET_DESCRIPTIONS.items():
                    print(f"{name:14s} {cfgmod.PRESETS[name]['command']:6s} {desc}")
                return EXIT_OK
            command, cfg = cfgmod.preset(args.name)
            if args.action == "show":
                sys.stdout.write(cfgmod.serialize(cfg))
                return EXIT_OK
            cfg = cfgmod.apply_overrides(cfg, {"seed": args.ov_seed, "out": args.ov_out})
        else:
            command = args.command
            cfg = resolve_config(args)
        fields = _run(command, cfg)
    except cfgmod.ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return EXIT_CONFIG
    except ConsistencyError as exc:
        log.error("numerical consistency failure: %s", exc)
        return EXIT_NUMERIC
    log.info("%s -> %s  %s", command, cfg.out, _summary(command, fields))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
