"""Command line entry point: ``redsub {gajda,support,algebra} --config PATH``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ContradictionError, RedsubError
from .experiment import ExperimentConfig, human_table, run

log = logging.getLogger("redsub")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redsub", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode, help_text in [
        ("gajda", "scan primes for reductions of x outside the reduced subgroup"),
        ("support", "compare orders of two reduced points prime by prime"),
        ("algebra", "run the order and module verification suites on fixtures"),
    ]:
        p = sub.add_parser(mode, help=help_text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", help="JSON-lines report path (overrides output_path)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for prime scans")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("-q", "--quiet", action="store_true", help="suppress the table on stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = ExperimentConfig.load(args.config)
        if cfg.mode != args.mode:
            log.error("config mode %r does not match subcommand %r", cfg.mode, args.mode)
            return 1
        if args.seed is not None:
            cfg.seed = args.seed
        report = run(cfg, threads=max(1, args.threads))
    except ContradictionError as exc:
        log.error("CONTRADICTION: %s", exc)
        return 1
    except (RedsubError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1
    out = args.out or cfg.output_path
    if out:
        report.write(out)
    if not args.quiet:
        print(human_table(report))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
