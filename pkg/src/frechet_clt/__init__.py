"""Fréchet means on model manifolds and Monte Carlo checks of their limit theorems."""

__version__ = "0.1.0"
