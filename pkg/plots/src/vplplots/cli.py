"""
Command line front end: plot-density, plot-phase, plot-nodal.

Panel layout is given as a comma-separated list of rows; each row is
``label=path0:path1:...`` (columns are whatever map artifacts are
listed, typically unperturbed/first/total).  The nodal command instead
takes per-row nodal and zeros JSON artifacts.
"""

from __future__ import annotations

import argparse
import sys

from .artifacts import ArtifactError
from .render import FigureRequest, render_density, render_nodal, render_phase


def _parse_rows(layout):
    # row labels must not contain '=' (the first one ends the label)
    rows = []
    for chunk in layout.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        label, _, paths = chunk.partition("=")
        if not paths:
            raise ArtifactError(f"row {chunk!r} is not label=path[:path...]")
        rows.append({"label": label, "panels": [p for p in paths.split(":") if p]})
    if not rows:
        raise ArtifactError("empty --layout")
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(prog="vpl-plots")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in ("plot-density", "plot-phase"):
        p = sub.add_parser(kind, help=f"{kind.split('-')[1]} heat-map panels")
        p.add_argument("--layout", required=True,
                       help="rows 'label=map0:map1:...' separated by commas")
        p.add_argument("--out", required=True)
        p.add_argument("--dpi", type=int, default=130)

    p = sub.add_parser("plot-nodal", help="Re/Im zero contours with zero markers")
    p.add_argument("--layout", required=True,
                   help="rows 'label=map' (map sets the view extent), separated by commas")
    p.add_argument("--nodal", required=True, action="append",
                   help="'label=nodal.json', repeatable per row")
    p.add_argument("--zeros", action="append", default=[],
                   help="'label=zeros.json', repeatable per row")
    p.add_argument("--out", required=True)
    p.add_argument("--dpi", type=int, default=130)

    args = parser.parse_args(argv)
    try:
        rows = _parse_rows(args.layout)
        if args.command == "plot-density":
            render_density(FigureRequest(rows=rows, out_path=args.out, dpi=args.dpi))
        elif args.command == "plot-phase":
            render_phase(FigureRequest(rows=rows, out_path=args.out, kind="phase", dpi=args.dpi))
        else:
            nodal = dict(item.partition("=")[::2] for item in args.nodal)
            zeros = dict(item.partition("=")[::2] for item in args.zeros)
            _, drawn, clipped = render_nodal(
                FigureRequest(
                    rows=rows, out_path=args.out, kind="nodal",
                    nodal_paths=nodal, zeros_paths=zeros, dpi=args.dpi,
                )
            )
            print(f"zero markers drawn: {drawn} (clipped: {clipped})")
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
