"""Simulation and closed-form analysis of RDARS-aided uplinks."""
__version__ = "0.1.0"
