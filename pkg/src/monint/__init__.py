"""Monadic intersection types for an effectful call-by-value lambda calculus."""

__version__ = "0.1.0"
