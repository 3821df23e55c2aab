"""Command line: swarmseek-plots <bundle-dir> <kind> <out-image>."""

from __future__ import annotations

import argparse
import sys

from .bundle import SchemaMismatch
from .render import FIGURE_KINDS, PlotJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="swarmseek-plots",
        description="Render figures from a swarmseek run bundle")
    parser.add_argument("bundle", help="bundle directory (trajectory.csv, "
                        "metrics.json, manifest.json)")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("out", help="output image path (png, pdf, svg, ...)")
    args = parser.parse_args(argv)
    try:
        path = render(PlotJob(args.bundle, args.kind, args.out))
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
