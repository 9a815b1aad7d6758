"""Adherence prediction pipeline: from raw activity tables to cross-validated scores."""

__version__ = "0.1.0"
