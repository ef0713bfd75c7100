"""Variational Monte Carlo with graph-network wave-functions for J1-J2 Heisenberg models."""

__version__ = "0.1.0"
