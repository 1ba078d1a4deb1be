"""Chart rendering for benchmark CSV files."""

from .render import FigureSpec, NoDataError, SchemaError, render_figure, summarize_rows

__all__ = ["FigureSpec", "NoDataError", "SchemaError", "render_figure", "summarize_rows"]
