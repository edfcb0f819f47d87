"""Estimators, oracles and deviation bounds for KL and Renyi divergences."""

__version__ = "0.1.0"
