"""Gradient descent with Armijo line-search on non-uniformly smooth objectives."""

__version__ = "0.1.0"
