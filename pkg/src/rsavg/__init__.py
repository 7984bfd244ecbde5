"""Rankin-Selberg central values over ring class and cyclotomic character families."""

__version__ = "0.1.0"
