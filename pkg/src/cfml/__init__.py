"""Metric theory of continued fractions with large prime partial quotients.

Submodules:

``cfml.cf``        exact continued-fraction kernel (convergents, cylinders, measures)
``cfml.primes``    segmented sieve, prime-interval counts, reciprocal-square tails
``cfml.phi``       threshold functions phi: N -> R+
``cfml.pressure``  finite-alphabet pressure sums, s_n(B, M) and the dimension formula
``cfml.measure``   event checkers, seeded Monte Carlo, series test, Chung-Erdos ratio
``cfml.cantor``    Cantor-set construction, mass distribution and its audits
``cfml.cli``       ``cfml`` command-line entry point
"""

from cfml.cf import Cylinder, Word, convergents, cylinder, digit_slice_measure, evaluate, expand, tail_union_measure
from cfml.errors import CapExceeded, CfmlError, DomainError, NumericalFailure
from cfml.phi import PhiSpec

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "CfmlError",
    "Cylinder",
    "DomainError",
    "NumericalFailure",
    "PhiSpec",
    "Word",
    "convergents",
    "cylinder",
    "digit_slice_measure",
    "evaluate",
    "expand",
    "tail_union_measure",
]
