"""Command line: render_figures --figure {1,2,3} --in <csv...> --out <image>."""

from __future__ import annotations

import argparse
import sys

from .core import CsvFormatError, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render case-study figures from simulation CSV outputs.",
    )
    parser.add_argument("--figure", type=int, choices=(1, 2, 3), required=True)
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True, metavar="CSV",
        help="input CSVs (one field snapshot for fig 1, boundary traces for fig 2, "
        "detection traces for fig 3)",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--threshold", type=float, default=None,
        help="threshold line for figure 3",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            figure=args.figure,
            inputs=tuple(args.inputs),
            output=args.out,
            threshold=args.threshold,
        )
        render(spec)
    except (CsvFormatError, ValueError, OSError) as exc:
        print(f"render_figures: {exc}", file=sys.stderr)
        return 1
    print(f"render_figures: wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
