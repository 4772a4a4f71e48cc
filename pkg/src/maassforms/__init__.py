"""Verified computation of weight-0 Maass cusp forms on Gamma0(N).

The package tracks explicit error radii end to end: ball arithmetic,
rigorously enclosed K-Bessel values, exact integer group theory for the
pullback step, and a-posteriori enclosures for the solved coefficient
vectors.  See README.md for the command-line interface.
"""

__version__ = "0.1.0"

from .ball import Ball, ComplexBall, ball_make, ball_op, ball_sign, e_unit, elem_fn
from .errors import (
    DomainError,
    FormatError,
    MaassError,
    PrecisionError,
    SingularSystemError,
    SpuriousBracketError,
)
from .precision import DEFAULT_PRECISION, get_precision, working_precision


def __getattr__(name):
    # heavier modules load lazily so `import maassforms` stays light
    from importlib import import_module

    for mod in ("kbessel", "geometry", "hejhal", "certify", "records", "portrait", "cli"):
        module = import_module("." + mod, __name__)
        if hasattr(module, name):
            return getattr(module, name)
    raise AttributeError(name)

__all__ = [
    "Ball",
    "ComplexBall",
    "ball_make",
    "ball_op",
    "ball_sign",
    "e_unit",
    "elem_fn",
    "DomainError",
    "FormatError",
    "MaassError",
    "PrecisionError",
    "SingularSystemError",
    "SpuriousBracketError",
    "DEFAULT_PRECISION",
    "get_precision",
    "working_precision",
    "__version__",
]
