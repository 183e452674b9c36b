"""Demand-private coded caching: schemes, verifiers and trade-off tools."""

__version__ = "0.1.0"
