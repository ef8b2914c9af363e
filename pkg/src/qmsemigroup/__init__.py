"""Symmetric quantum Markov semigroups on matrix algebras: entropy decay,
return times and modified log-Sobolev constants."""

from . import algebra, constants, entropy, linalg, models, semigroup
from .errors import QmsError

__version__ = "0.1.0"

__all__ = ["QmsError", "algebra", "constants", "entropy", "linalg", "models", "semigroup"]
