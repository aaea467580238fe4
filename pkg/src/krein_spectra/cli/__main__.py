"""Command-line entry point: ``krein-spectra --config run.yaml --out DIR``."""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError
from .config import parse_config
from .runner import EXIT_ERROR, run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="krein-spectra", description=__doc__)
    ap.add_argument("--config", required=True, help="YAML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--tol", type=float, help="root-finding tolerance (overrides tolerances.root)")
    ap.add_argument("--trunc", type=int, help="number of levels used by truncated series")
    ap.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")
    args = ap.parse_args(argv)
    if args.threads < 1:
        ap.error("--threads must be >= 1")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for line, msg in exc.errors:
            where = f"{args.config}:{line}: " if line else f"{args.config}: "
            print(f"{where}{msg}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg, args.out, tol=args.tol, trunc=args.trunc, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
