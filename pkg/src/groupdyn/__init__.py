"""Probabilistic group formation: simulation and equilibrium analysis."""

__version__ = "0.1.0"
