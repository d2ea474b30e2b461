"""Curvature statistics of isosurfaces in isotropic Gaussian random fields."""
__version__ = "0.1.0"
