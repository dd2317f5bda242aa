"""Reduction of second-order Horn clause sets (metarules)."""

__version__ = "0.1.0"
