"""Figure rendering for experiment harness CSVs."""

from .render import KINDS, PlotSpec, read_rows, render, rmse_cells

__all__ = ["KINDS", "PlotSpec", "read_rows", "render", "rmse_cells"]
