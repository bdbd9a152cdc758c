"""Rollup fee-mechanism and DA-attack simulation library."""

__version__ = "0.1.0"
