"""Numerical experiments on classical arguments for probability in physics."""

__version__ = "0.1.0"
