"""Harvest Dublin Core metadata over OAI-PMH and measure its quality."""

__version__ = "0.1.0"
