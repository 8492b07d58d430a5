"""Minimum message length (MML87) inference for Weibull lifetime data."""

__version__ = "0.1.0"
