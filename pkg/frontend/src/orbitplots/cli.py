"""Command line: ``plots <kind> --in PATH [--block I] --out PATH``.

Inputs are the solver's run files: trajectory.csv for phase/timeseries/
energy, sweep.csv for sweep-heatmap, orbit.json for convergence.  Phase
and energy figures overlay block bounds and cap levels when a report.json
is supplied via --report.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureError, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="render figures from solver run outputs")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--in", dest="source", required=True,
                       help="input file (trajectory.csv, sweep.csv, or "
                            "orbit.json depending on the kind)")
        p.add_argument("--out", required=True,
                       help="output image path (.png or .svg)")
        p.add_argument("--block", type=int, default=1,
                       help="1-based block index")
        p.add_argument("--coord", type=int, default=0,
                       help="coordinate index within the block")
        p.add_argument("--report", default=None,
                       help="report.json for bound/cap overlays")
        p.add_argument("--title", default=None)
        p.add_argument("--xlabel", default=None)
        p.add_argument("--ylabel", default=None)
        if kind == "sweep-heatmap":
            p.add_argument("--x", default=None, help="x-axis column")
            p.add_argument("--y", default=None, help="y-axis column")
            p.add_argument("--value", default="residual",
                           help="color-value column")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(kind=args.kind, source=args.source, out=args.out,
                          report=args.report, block=args.block,
                          coord=args.coord,
                          x=getattr(args, "x", None),
                          y=getattr(args, "y", None),
                          value=getattr(args, "value", "residual"),
                          xlabel=args.xlabel, ylabel=args.ylabel,
                          title=args.title)
        path = render(spec)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
