"""Spectrum-sharing OFDM capacity toolkit with random subcarrier allocation."""

__version__ = "0.1.0"
