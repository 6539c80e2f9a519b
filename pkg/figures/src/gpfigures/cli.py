"""figures: render scaling charts from sweep CSVs.

Example:
  figures --csv out/order_sweep.csv --y n_min_mean \
          --model-cols pred_n_exact pred_n_tablefit --out order_n.png
"""

from __future__ import annotations

import argparse
import sys

from .plotting import FigureSpec, plot_scaling


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="figures", description=__doc__)
    parser.add_argument("--csv", nargs="+", required=True, help="sweep CSV file(s)")
    parser.add_argument("--y", required=True, help="column to plot against lambda_k")
    parser.add_argument("--model-cols", nargs="*", default=[], help="prediction columns to overlay")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    spec = FigureSpec(
        csv_paths=tuple(args.csv),
        y_column=args.y,
        model_columns=tuple(args.model_cols),
        out_path=args.out,
        title=args.title,
    )
    result = plot_scaling(spec)
    slope = "n/a" if result.slope is None else f"{result.slope:.3f}"
    print(f"wrote {result.out_path} ({result.points} points, slope {slope})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
