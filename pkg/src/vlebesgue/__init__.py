"""Numerical toolkit for weighted variable Lebesgue spaces and the Cauchy singular integral."""
__version__ = "0.1.0"
