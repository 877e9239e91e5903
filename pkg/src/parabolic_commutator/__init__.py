"""Numerical toolkit for Calderon-type commutators along the parabola (t, t^2)."""
from .geometry import ParaCube, ParaPoint, PolarCoords
from .grid import Field2D, TorusGrid
from .symbols import SymbolA, make_symbol
from .operators import CurveOpSpec, HomKernelProfile

__all__ = ["ParaPoint", "ParaCube", "PolarCoords", "TorusGrid", "Field2D", "SymbolA",
           "make_symbol", "CurveOpSpec", "HomKernelProfile"]
__version__ = "0.1.0"
