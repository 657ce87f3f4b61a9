"""Finsler geodesic dynamics on the 2-sphere and contact lifts to the 3-sphere."""

from ._core import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
