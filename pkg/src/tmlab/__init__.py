"""Numerical toolkit for sharp Trudinger-Moser type functionals on weighted radial Sobolev spaces."""

__version__ = "0.1.0"
