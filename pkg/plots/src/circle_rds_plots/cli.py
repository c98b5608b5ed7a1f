"""Command line front end: render one figure from one output file.

Exit codes: 0 on success, 2 when the input is unreadable, malformed,
or violates its column contract.  No file is written on failure.
"""

import argparse
import sys

from . import __version__
from .figures import KINDS, FigureSpec, InputError, render


def _summary(info, output):
    kind = info["kind"]
    if kind == "decay":
        return (f"decay: wrote {output} ({info['points_drawn']} points, "
                f"{len(info['series'])} series)")
    if kind == "density":
        return (f"density: wrote {output} (horizon {info['horizon']}, "
                f"final density {info['final_density']:.4g})")
    if kind == "loglog":
        alpha = info["alpha_hat"]
        tail = "no fit" if alpha is None else f"slope {alpha:.4g}"
        return f"loglog: wrote {output} ({info['points_drawn']} points, {tail})"
    if kind == "histogram":
        return f"histogram: wrote {output} ({info['samples']} samples)"
    flag = "verified" if info["verified"] else "not verified"
    return f"arcs: wrote {output} ({flag})"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="circle-rds-plots",
        description="Draw figures from circle-rds CSV and certificate "
                    "files.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("render", help="render one figure")
    rp.add_argument("kind", choices=KINDS)
    rp.add_argument("input",
                    help="rates/density/holder/stationary CSV, or a "
                         "certificate .json/.jsonl for the arcs kind")
    rp.add_argument("output", help="image file to write (.png, .svg, .pdf)")
    rp.add_argument("--xlabel", default=None)
    rp.add_argument("--ylabel", default=None)
    rp.add_argument("--title", default=None)
    rp.add_argument("--dpi", type=int, default=120)
    rp.add_argument("--index", type=int, default=0,
                    help="record to use from a .jsonl certificate file")

    args = parser.parse_args(argv)
    spec = FigureSpec(kind=args.kind, input_path=args.input,
                      output_path=args.output, xlabel=args.xlabel,
                      ylabel=args.ylabel, title=args.title, dpi=args.dpi,
                      index=args.index)
    try:
        info = render(spec)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(_summary(info, args.output))
    return 0


if __name__ == "__main__":
    sys.exit(main())
