"""Post-hoc scaling charts for sweep CSVs.

Consumes only the sweep CSV interface of the experiment harness; all
statistics are read from the file, never recomputed from runs. The one piece
of arithmetic performed here is the least-squares log-log slope used for the
legend annotation, which mirrors the harness's published fit definition.
"""

from .plotting import EXPECTED_COLUMNS, FigureSpec, PlotResult, loglog_fit, plot_scaling, read_sweep_rows

__version__ = "0.1.0"
