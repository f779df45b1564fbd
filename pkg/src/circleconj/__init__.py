"""Numerical laboratory for C2 circle diffeomorphisms."""
__version__ = "0.1.0"
