"""Numerical toolkit for the CR k-Yamabe problem on the Heisenberg group."""

__version__ = "0.1.0"
