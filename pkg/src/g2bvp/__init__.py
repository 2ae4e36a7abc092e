"""Linear theory of the G2 boundary value problem on flat model geometries."""

__version__ = "0.1.0"
