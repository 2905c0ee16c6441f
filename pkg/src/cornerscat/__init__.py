"""Numerical laboratory for corner scattering in 2D inhomogeneous Helmholtz media."""

__version__ = "0.1.0"

from . import (asymptotics, cgo, discref, errors, experiments, fields, forward,
               geometry, grids)

__all__ = [
    "asymptotics",
    "cgo",
    "discref",
    "errors",
    "experiments",
    "fields",
    "forward",
    "geometry",
    "grids",
]
