"""Adaptive stochastic minimization under probing constraints."""

__version__ = "0.1.0"
