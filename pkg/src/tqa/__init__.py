"""Temporal question answering over an incomplete KB with targeted text extraction."""

__version__ = "0.1.0"
