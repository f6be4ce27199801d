"""Finite-element solver for thin elastic beams with beam-to-beam contact."""

__version__ = "0.1.0"
