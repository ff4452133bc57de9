"""Augmented restricted-eigenvalue certification for corrupted Gaussian designs."""

__version__ = "0.1.0"
