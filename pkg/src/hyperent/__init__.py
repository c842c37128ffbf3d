"""Simulation of three-photon polarization/OAM hyper-entanglement protocols."""

__version__ = "0.1.0"
