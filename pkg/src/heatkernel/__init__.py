"""Exact heat-kernel expansions for higher-order operators d/dt v = kappa L v."""
__version__ = "0.1.0"
