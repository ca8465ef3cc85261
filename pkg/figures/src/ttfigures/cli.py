"""Script entry point: ttfigures render <figure-id> <input-dir> <output-path>."""

from __future__ import annotations

import argparse
import sys

from .figures import RENDERERS, render
from .loading import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ttfigures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure family from CSV outputs")
    p.add_argument("figure_id", choices=sorted(RENDERERS))
    p.add_argument("input_dir")
    p.add_argument("output_path")
    args = parser.parse_args(argv)
    try:
        path = render(args.figure_id, args.input_dir, args.output_path)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
