"""Numerical laboratory for Lagrangian norm inflation in 2D Euler vorticity."""

__version__ = "0.1.0"
