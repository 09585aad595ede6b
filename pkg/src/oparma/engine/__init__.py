"""Noise sampling, stationary-solution simulation, and moment diagnostics."""
