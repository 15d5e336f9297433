"""Numerical verification of entropy, heat-kernel and volume estimates on model Ricci shrinkers."""

__version__ = "0.1.0"
