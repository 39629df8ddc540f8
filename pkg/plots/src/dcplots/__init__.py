"""Batch figure rendering over devcompress run CSVs.

This package never imports devcompress itself; it consumes only the CSV
files the experiment runner writes to disk.
"""

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    SchemaError,
    build_figure,
    load_runs,
    median_band,
    render_figure,
)

__all__ = [
    "FIGURE_KINDS",
    "FigureSpec",
    "SchemaError",
    "build_figure",
    "load_runs",
    "median_band",
    "render_figure",
]
