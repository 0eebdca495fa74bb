"""Figure generation for solver run outputs."""

__version__ = "0.1.0"

from .figures import KINDS, FigureError, FigureSpec, render

__all__ = ["KINDS", "FigureError", "FigureSpec", "render", "__version__"]
