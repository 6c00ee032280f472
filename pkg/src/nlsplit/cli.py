"""``nls`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nls", description="Splitting schemes for NLS with rough data.")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="evolve once and dump snapshots")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)

    conv = sub.add_parser("converge", help="tau sweep against a fine-step reference")
    conv.add_argument("--config", required=True)
    conv.add_argument("--out", required=True)
    conv.add_argument("--schemes", default=None, help="comma list, e.g. lie,strang,filtered_lie")

    ver = sub.add_parser("verify", help="run built-in verification suites")
    ver.add_argument("--suite", required=True, help=",".join(harness.VERIFY_SUITES))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    # --seed may also follow the subcommand
    argv = list(sys.argv[1:] if argv is None else argv)
    seed = None
    if "--seed" in argv:
        i = argv.index("--seed")
        if i + 1 >= len(argv):
            parser.error("--seed needs a value")
        try:
            seed = int(argv[i + 1])
        except ValueError:
            parser.error("--seed needs an integer")
        del argv[i : i + 2]
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    seed = seed if seed is not None else args.seed
    if args.command == "simulate":
        return harness.cmd_simulate(args.config, args.out, seed=seed)
    if args.command == "converge":
        schemes = [s.strip() for s in args.schemes.split(",")] if args.schemes else None
        return harness.cmd_converge(args.config, args.out, schemes=schemes, seed=seed)
    suites = [s.strip() for s in args.suite.split(",") if s.strip()]
    return harness.cmd_verify(suites)


if __name__ == "__main__":
    sys.exit(main())
