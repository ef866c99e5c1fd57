"""Command line entry point: ``beamseek run | validate | spectrum``."""

import argparse
import logging
import sys
import time
from pathlib import Path

from .sim import ConfigError, SimConfig, load_config, run
from .spectrum import target_spectrum
from .validate import SUITES


def _cmd_run(args):
    try:
        cfg = load_config(args.config) if args.config else SimConfig()
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    try:
        summary, _ = run(cfg, out_dir=out, plots=not args.no_plots)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(summary.lines()))
    print(f"outputs written to {out}")
    return 0


def _cmd_validate(args):
    kinds = list(SUITES) if args.kind == "all" else [args.kind]
    failed = 0
    for kind in kinds:
        t0 = time.perf_counter()
        checks = SUITES[kind]()
        for chk in checks:
            print(f"{kind:>9} {chk.line()}")
            failed += not chk.passed
        print(f"{kind:>9} ({time.perf_counter() - t0:.2f} s)")
    return 1 if failed else 0


def _cmd_spectrum(args):
    try:
        rep = target_spectrum(args.c, args.kbar, args.elems, args.modes,
                              with_ode=not args.beam_only)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(rep.lines()))
    if args.csv:
        rep.to_csv(args.csv)
    if args.plot:
        from .plotting import plot_spectrum
        plot_spectrum(args.plot, rep)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="beamseek",
        description="Extremum seeking through a flexible beam with backstepping boundary control.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate the closed loop")
    p.add_argument("--config", help="flat key = value file (defaults if omitted)")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="run a self-check suite")
    p.add_argument("kind", choices=[*SUITES, "all"])
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("spectrum", help="target-system eigenvalues vs closed form")
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--kbar", type=float, default=0.1)
    p.add_argument("--elems", type=int, default=200)
    p.add_argument("--modes", type=int, default=4)
    p.add_argument("--beam-only", action="store_true", help="drop the scalar ODE row")
    p.add_argument("--csv", help="write the report as CSV")
    p.add_argument("--plot", help="write a PNG of the eigenvalues")
    p.set_defaults(func=_cmd_spectrum)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
