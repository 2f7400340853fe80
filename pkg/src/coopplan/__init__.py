"""Cooperative multi-agent embodied planning with learned action costs and an evolving shared tip list."""

__version__ = "0.1.0"
