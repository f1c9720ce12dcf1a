"""Spectral geometry of stretched ovals, ellipses and axisymmetric ellipsoids."""
__version__ = "0.1.0"
