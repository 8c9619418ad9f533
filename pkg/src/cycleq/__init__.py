"""Cycle-model quantum simulation with a state-vector reference engine."""

__version__ = "0.1.0"
