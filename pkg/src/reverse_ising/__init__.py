"""Reverse-Ising design: quadratic Hamiltonians whose ground states realise logic circuits."""

__version__ = "0.1.0"
