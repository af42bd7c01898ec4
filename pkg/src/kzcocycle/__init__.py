"""Kontsevich-Zorich cocycle experiments on square-tiled cyclic covers."""

__version__ = "0.1.0"
