"""Numerical companion for singular solutions of fractional conformally
invariant equations: constants, the fractional Laplacian, the degenerate
extension, capacities, Kelvin transforms and quantitative probes."""

from .core import FracParams, constants

__version__ = "0.1.0"
__all__ = ["FracParams", "constants", "__version__"]
