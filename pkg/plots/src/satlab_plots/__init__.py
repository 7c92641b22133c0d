"""Figure rendering for satlab experiment CSVs."""

from .render import ALPHA_C_3SAT, KINDS, FigureSpec, SchemaError, build_figure, render

__version__ = "0.1.0"
__all__ = ["ALPHA_C_3SAT", "KINDS", "FigureSpec", "SchemaError", "build_figure", "render"]
