"""Data-driven model order reduction from transfer-function samples.

Balanced truncation (QuadBT, DD-ADI-BT, DD-PORK-DTBT) and IRKA variants
that work on sampled data only, plus the dense linear algebra, benchmark
systems, quadrature rules and file formats they need.
"""
from . import bt, dense, errors, interp, io, irka, pork, quadrature, quadruplet, systems
from .errors import DdmorError, NumericalError, ValidationError
from .systems import StateSpace

__version__ = "0.1.0"

__all__ = ["bt", "dense", "errors", "interp", "io", "irka", "pork", "quadrature",
           "quadruplet", "systems", "StateSpace", "DdmorError", "NumericalError",
           "ValidationError", "__version__"]
