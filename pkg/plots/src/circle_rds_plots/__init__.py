"""Figure scripts for circle-rds output files."""

__version__ = "0.1.0"

from .figures import (FigureSpec, InputError, build_figure,
                      certificate_arc_spans, load_certificate, render)

__all__ = ["FigureSpec", "InputError", "build_figure",
           "certificate_arc_spans", "load_certificate", "render",
           "__version__"]
