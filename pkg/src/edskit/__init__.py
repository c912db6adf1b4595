"""Symbolic-numeric tools for decomposable exterior differential systems."""

__version__ = "0.1.0"
