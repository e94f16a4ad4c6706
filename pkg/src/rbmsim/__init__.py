"""Reflected Brownian particle systems with rank-one local-time coupling.

Simulation of finite interacting systems, their exchangeable mean-field
limit, breakdown detection, spectral regime classification, stationary and
self-similar profile analytics, and a finite-volume Fokker-Planck
cross-check, plus a reproducible experiment CLI.
"""
__version__ = "0.1.0"
