"""Canonical and non-canonical decompositions of single-photon angular momentum."""

__version__ = "0.1.0"
