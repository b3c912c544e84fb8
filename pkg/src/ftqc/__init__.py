"""Fault-tolerant resource estimation for the transverse Ising ground-state energy."""

__version__ = "0.1.0"
