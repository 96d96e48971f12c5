"""Static figures from relkin run directories.

Reads a finished run only through its manifest and the CSV artifacts the
manifest names, and writes each figure as one raster and one vector file
plus a sidecar index.  The style is pinned in code so a rerun reproduces
every output byte for byte.
"""

from .figures import KINDS, FigureSpec, RenderError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "KINDS", "RenderError", "render", "__version__"]
