"""Achievable-rate and outage simulation for compute-and-forward relaying."""

__version__ = "0.1.0"
