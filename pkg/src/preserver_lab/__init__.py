"""Exact tools for multilinear polynomials on matrix algebras and the
linear maps that preserve their zeros."""

__version__ = "0.1.0"
