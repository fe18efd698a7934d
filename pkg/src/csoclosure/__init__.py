"""Weighted shifts, palindromic truncations and complex symmetric approximation."""

__version__ = "0.1.0"
