"""Simulation and verification lab for random walks on circle homeomorphisms."""

__version__ = "0.1.0"
