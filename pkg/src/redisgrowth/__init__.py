"""Redistribution and growth under risky multiplicative human capital."""

__version__ = "0.1.0"
