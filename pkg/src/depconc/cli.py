"""Command-line entry point: ``depconc <scenario> --config FILE [--seed] [--trials] [--out]``.

Exit status: 0 when every check holds, 1 when some check fails, 2 on usage
or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import SCENARIOS, ConfigError, load_config, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("trials must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="depconc", description="Run a reproducible experiment scenario.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--seed", type=_u64, default=None, help="override the config seed")
    ap.add_argument("--trials", type=_positive, default=None, help="override the number of trials")
    ap.add_argument("--out", default=None, help="output root directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, scenario=args.scenario, seed=args.seed,
                          trials=args.trials, out_dir=args.out)
    except ConfigError as exc:
        print(f"depconc: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run(cfg)
    except ConfigError as exc:
        print(f"depconc: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"depconc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = "all checks hold" if result.holds else "some checks failed"
    print(f"{cfg.scenario}: {status}; report in {result.run_dir}")
    return EXIT_OK if result.holds else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
