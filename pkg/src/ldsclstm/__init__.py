"""Lexicalized + delexicalized semantically conditioned LSTM generator for dialogue acts."""

__version__ = "0.1.0"
