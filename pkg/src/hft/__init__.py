"""Fault-tolerant syndrome extraction for CSS codes."""
__version__ = "0.1.0"
