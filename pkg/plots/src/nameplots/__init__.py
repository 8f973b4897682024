"""Render-to-file figures from nameorigin plotdata CSVs."""

from .figures import FigureKind, FigureSpec, SchemaError, heatmap_annotations, render

__all__ = ["FigureKind", "FigureSpec", "SchemaError", "heatmap_annotations", "render"]

__version__ = "0.1.0"
