"""Command line entry point: dcplots --in <dir> --fig <kind> --envs <E> --out <path>."""

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render_figure


def make_parser():
    parser = argparse.ArgumentParser(
        prog="dcplots", description="Render figures from experiment run CSVs."
    )
    parser.add_argument(
        "--in", dest="in_dir", required=True, metavar="DIR",
        help="experiment output directory (root with e<N> subdirs, or one e<N> dir)",
    )
    parser.add_argument(
        "--fig", dest="kind", required=True, choices=FIGURE_KINDS,
        help="which figure to render",
    )
    parser.add_argument(
        "--envs", type=int, default=2, metavar="E",
        help="environment count to plot (ignored by the compression figure)",
    )
    parser.add_argument(
        "--out", required=True, metavar="PATH",
        help="output image path (.svg or .pdf for vector output)",
    )
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind, env_count=args.envs, in_dir=args.in_dir, out_path=args.out
    )
    try:
        path = render_figure(spec)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
