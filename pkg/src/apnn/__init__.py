"""Asymptotic-preserving neural solvers for the Vlasov-Poisson-Fokker-Planck system."""

__version__ = "0.1.0"
