"""Heralded noiseless linear amplification simulator for single-rail entanglement distribution."""

__version__ = "0.1.0"
