"""Perron-Frobenius analysis of positive and eventually positive matrix semigroups."""

from .engine import Generator, classify_asymptotics, equilibrium_projection, is_irreducible, is_metzler, spectrum
from .matrix_core import expm

__all__ = ["Generator", "classify_asymptotics", "equilibrium_projection", "expm", "is_irreducible",
           "is_metzler", "spectrum"]
__version__ = "0.1.0"
