"""Validation, registration and fault simulation for OAI-PMH 2.0 data-providers."""

__version__ = "0.1.0"
