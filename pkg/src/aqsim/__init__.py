"""Simulator for arbitrated quantum signature protocols and attacks on them."""

__version__ = "0.1.0"
