"""Chiral spin-chain laboratory: reservoir rates, dimer master equation, trajectories."""
__version__ = "0.1.0"
