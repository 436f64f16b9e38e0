"""Command line: kinfigs plot <kind> --in <dir> --out <file>."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .schema import SchemaError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kinfigs",
        description="Render figures from parakin CSV artifacts",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render one figure kind")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--in", dest="input_dir", required=True,
                   help="run directory (snapshots/convergence/mass) or sweep "
                        "directory (linf_error/speedup_bars)")
    p.add_argument("--out", dest="output", required=True, help="image file to write")
    p.add_argument("--linear-y", action="store_true",
                   help="disable the default log y-scale of convergence/mass/linf_error")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            input_dir=args.input_dir,
            output=args.output,
            log_y=False if args.linear_y else None,
        )
        out = render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
