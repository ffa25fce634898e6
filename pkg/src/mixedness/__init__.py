"""Simulation and verification testbed for testing whether a quantum state is maximally mixed."""

__version__ = "0.1.0"
