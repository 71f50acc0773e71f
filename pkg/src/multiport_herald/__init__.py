"""Exact Fock-space simulation of multiport heralding schemes."""

__version__ = "0.1.0"
