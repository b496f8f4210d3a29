"""Characteristic numbers of closed manifolds given by chart atlases."""

__version__ = "0.1.0"
