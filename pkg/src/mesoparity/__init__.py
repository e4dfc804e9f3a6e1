"""Numerical study of indirect two-qubit parity measurement through a
collectively controlled many-spin system, with entanglement bounds under
limited polarization."""

__version__ = "0.1.0"
