"""Quantum-injected optical parametric amplifier simulation toolkit."""

__version__ = "0.1.0"
