"""Exception types shared across the package."""


class CweigError(Exception):
    """Base class for all package errors."""


class InfeasibleShape(CweigError):
    """Support function has a non-positive curvature radius somewhere."""


class PoleError(CweigError, ZeroDivisionError):
    """A Bessel ratio J'_n/J_n was requested at (or too close to) a zero of J_n."""


class UncertifiedTail(CweigError):
    """A sign scan could not be closed by the monotone-tail certificate."""


class IllConditioned(CweigError):
    """Particular-solution basis lost too much rank to be trusted."""


class MissedEigenvalue(CweigError):
    """Eigenvalue sweep count disagrees with the Weyl-law estimate."""


class MultiplicityError(CweigError):
    """A simple eigenvalue was required but a cluster was found."""


class SolverFailure(CweigError):
    """The optimizer could not produce a usable iterate."""


class ShapeFileError(CweigError, ValueError):
    """Malformed shape file."""
