"""Text-based forecasting of time-indexed indicators with semantic path models."""

__version__ = "0.1.0"
