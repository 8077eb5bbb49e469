"""Dirichlet eigenvalues of planar bodies of constant width.

Disk analysis (which disk eigenvalues are weak local minimisers among
constant-width bodies) and numerical minimisation of ``lambda_h`` over
support-function shapes.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CweigError,
    IllConditioned,
    InfeasibleShape,
    MissedEigenvalue,
    MultiplicityError,
    PoleError,
    ShapeFileError,
    SolverFailure,
    UncertifiedTail,
)
from .geometry import SupportShape  # noqa: F401
