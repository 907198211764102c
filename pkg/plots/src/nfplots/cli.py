"""Command-line figure generation.

Exit codes: 0 success, 1 bad input file, 2 other failure.
"""

from __future__ import annotations

import argparse
import sys

from .panels import PlotInputError, plot_acd_panel, plot_density, plot_network


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="render figures from nfbayes experiment outputs"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    acd = sub.add_parser("acd", help="diagnostic-vs-tuning panel from a summary CSV")
    acd.add_argument("--in", dest="src", required=True, help="summary.csv path")
    acd.add_argument("--out", required=True, help="output image path")
    acd.add_argument(
        "--threshold", type=float, default=None, help="dashed threshold line value"
    )

    dens = sub.add_parser("density", help="contour plot from a density grid CSV")
    dens.add_argument("--in", dest="src", required=True, help="density_grid.csv path")
    dens.add_argument("--out", required=True, help="output image path")

    net = sub.add_parser("network", help="item network from a posterior summary CSV")
    net.add_argument("--in", dest="src", required=True, help="posterior_summary.csv path")
    net.add_argument("--out", required=True, help="output image path")
    net.add_argument("--items", type=int, required=True, help="number of items")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "acd":
            plot_acd_panel(args.src, out=args.out, threshold=args.threshold)
        elif args.verb == "density":
            plot_density(args.src, out=args.out)
        else:
            plot_network(args.src, items=args.items, out=args.out)
    except PlotInputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
