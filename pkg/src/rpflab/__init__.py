"""Regularized particle filters and their exact linear-Gaussian oracles."""

__version__ = "0.1.0"
