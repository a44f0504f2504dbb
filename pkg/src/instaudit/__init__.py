"""Fake and automated Instagram account detection."""

__version__ = "0.1.0"
