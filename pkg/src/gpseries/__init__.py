"""Formal solutions of differential, q-difference and Mahler equations over exponent lattices."""

from .analyzer import certify, diophantine_check, bruno_check, siegel_check
from .dsl import parse_document, parse_equation
from .equation import FunctionalEquation
from .lattice import Semigroup, certify as certify_lattice
from .series import GSeries, MultiSeries
from .solver import extend_solution, reduce_equation, solve, solve_taylor

__all__ = [
    "FunctionalEquation", "GSeries", "MultiSeries", "Semigroup",
    "bruno_check", "certify", "certify_lattice", "diophantine_check", "extend_solution",
    "parse_document", "parse_equation", "reduce_equation", "siegel_check", "solve", "solve_taylor",
]
