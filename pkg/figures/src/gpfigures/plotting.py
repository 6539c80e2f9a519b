from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import linear_regression

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

#: the sweep CSV schema this package consumes; nothing else is ever read
EXPECTED_COLUMNS = (
    "problem",
    "m",
    "lambda_k",
    "n_min_mean",
    "n_min_std",
    "t_c_mean",
    "n_fe_mean",
    "pred_n_exact",
    "pred_n_tablefit",
    "seed",
    "config_hash",
    "timestamp",
)

_NUMERIC = {
    "m",
    "lambda_k",
    "n_min_mean",
    "n_min_std",
    "t_c_mean",
    "n_fe_mean",
    "pred_n_exact",
    "pred_n_tablefit",
}

# fixed style so identical input yields identical bytes
_STYLE = {
    "figure.figsize": (7.0, 5.0),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "svg.hashsalt": "gpfigures",
    "font.size": 11,
}


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    csv_paths: tuple[str, ...]
    y_column: str
    out_path: str
    model_columns: tuple[str, ...] = ()
    title: str = ""

    def __post_init__(self):
        for col in (self.y_column, *self.model_columns):
            if col not in EXPECTED_COLUMNS:
                raise SchemaError(
                    f"unknown column {col!r}; sweep CSVs carry {list(EXPECTED_COLUMNS)}"
                )


@dataclass
class PlotResult:
    out_path: Path
    points: int
    slope: float | None = None
    model_columns: tuple[str, ...] = field(default_factory=tuple)


def read_sweep_rows(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(EXPECTED_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(
                f"{path}: missing columns {sorted(missing)}; "
                f"expected schema {list(EXPECTED_COLUMNS)}"
            )
        rows = []
        for raw in reader:
            row = dict(raw)
            for key in _NUMERIC:
                row[key] = float(raw[key])
            rows.append(row)
    return rows


def loglog_fit(points: list[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope/intercept of log y on log x; the harness's fit."""
    if len(points) < 2:
        raise ValueError("need at least 2 points to fit a slope")
    if any(x <= 0 or y <= 0 for x, y in points):
        raise ValueError("log-log fit needs strictly positive coordinates")
    fit = linear_regression([math.log(x) for x, _ in points], [math.log(y) for _, y in points])
    return fit.slope, fit.intercept


def plot_scaling(spec: FigureSpec) -> PlotResult:
    """One log-log chart: measured series with error bars, optional model
    overlays, fitted slope in the legend (skipped below 2 usable points)."""
    rows: list[dict] = []
    for path in spec.csv_paths:
        rows.extend(read_sweep_rows(path))
    rows.sort(key=lambda r: r["lambda_k"])
    usable = [r for r in rows if not math.isnan(r[spec.y_column]) and r[spec.y_column] > 0]

    xs = [r["lambda_k"] for r in usable]
    ys = [r[spec.y_column] for r in usable]

    slope = None
    if len(usable) >= 2:
        slope, _ = loglog_fit(list(zip(xs, ys)))

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        label = "measured"
        if slope is not None:
            label += f" (slope {slope:.3f})"
        yerr = [r["n_min_std"] for r in usable] if spec.y_column == "n_min_mean" else None
        ax.errorbar(
            xs, ys, yerr=yerr, marker="o", linestyle="-", color="#1f5fa8",
            capsize=3, label=label,
        )
        for col, style in zip(spec.model_columns, ("--", ":", "-.")):
            model_rows = [r for r in rows if not math.isnan(r[col]) and r[col] > 0]
            ax.plot(
                [r["lambda_k"] for r in model_rows],
                [r[col] for r in model_rows],
                style, marker="s", markersize=4, label=col,
            )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("most compact solution size")
        ax.set_ylabel(spec.y_column)
        if spec.title:
            ax.set_title(spec.title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        out = Path(spec.out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if out.suffix == ".svg" else None
        fig.savefig(out, metadata=metadata)
        plt.close(fig)

    return PlotResult(
        out_path=out, points=len(usable), slope=slope, model_columns=spec.model_columns
    )
