"""Simulation toolkit for sum-frequency generation with entangled photon pairs."""
