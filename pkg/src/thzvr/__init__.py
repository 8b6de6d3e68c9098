"""Terahertz VR link reliability: analytics and Monte Carlo."""

__version__ = "0.1.0"
