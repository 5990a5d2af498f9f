"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (bad flag, config or layout file),
2 a check failed (derivative audit or infeasible output layout).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import ALGORITHMS, ConfigError, ExperimentConfig, parse_value
from .harness import cmd_bench_runtime, cmd_check_derivatives, cmd_optimize, cmd_sweep_gain

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 1, 2

# fields with a dedicated flag of their own
_DEDICATED = {"algorithm", "seed", "out"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", metavar="PATH", help="INI file; flags below override it")
    g.add_argument("--seed", type=int, metavar="U64")
    g.add_argument("--out", metavar="DIR", help="output directory")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in _DEDICATED:
            continue
        g.add_argument("--" + f.name.replace("_", "-"), dest="ov_" + f.name, metavar="VALUE",
                       help=f"[{f.metadata['section']}] default {f.default!r}")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="squintless", description="Wideband movable-antenna layout optimization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", parents=[common], help="optimize a layout and write its trace")
    p.add_argument("--algorithm", choices=ALGORITHMS)

    p = sub.add_parser("sweep-gain", parents=[common], help="gain of layout files across the band")
    p.add_argument("layouts", nargs="+", metavar="LAYOUT")
    p.add_argument("--output", metavar="CSV", help="default <out>/sweep_gain.csv")

    p = sub.add_parser("bench-runtime", parents=[common], help="time per sweep vs subcarrier count")
    p.add_argument("--l-values", default="64,128,256,512,1024", metavar="L1,L2,...")
    p.add_argument("--timed", type=int, default=5, help="timed sweeps after the warm-up")
    p.add_argument("--output", metavar="CSV", help="default <out>/bench_runtime.csv")

    p = sub.add_parser("check-derivatives", parents=[common], help="audit the closed-form calculus")
    p.add_argument("--trials", type=int, default=100)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    for f in dataclasses.fields(ExperimentConfig):
        raw = getattr(args, "ov_" + f.name, None)
        if raw is not None:
            changes[f.name] = parse_value(f, raw)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if getattr(args, "algorithm", None) is not None:
        changes["algorithm"] = args.algorithm
    return cfg.replace(**changes)


def _parse_l_values(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError("l_values", f"expected comma-separated integers, got {text!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "optimize":
            try:
                summary = cmd_optimize(cfg)
            except RuntimeError as exc:
                print(f"check failed: {exc}", file=sys.stderr)
                return EXIT_CHECK
            brief = {k: v for k, v in summary.items() if k not in ("config", "config_ini")}
            print(json.dumps(brief, indent=2))
        elif args.command == "sweep-gain":
            print(cmd_sweep_gain(cfg, args.layouts, args.output))
        elif args.command == "bench-runtime":
            print(cmd_bench_runtime(cfg, _parse_l_values(args.l_values), args.output, args.timed))
        elif args.command == "check-derivatives":
            results = cmd_check_derivatives(cfg, args.trials)
            for r in results:
                print(r.line())
            if not all(r.passed for r in results):
                return EXIT_CHECK
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
