"""Synthetic 3D crack structures from minimum-weight surfaces in bounded Voronoi diagrams."""

__version__ = "0.1.0"
