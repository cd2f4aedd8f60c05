"""Compliant whole-body loco-manipulation control toolkit."""

__version__ = "0.1.0"
