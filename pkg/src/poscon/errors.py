"""Exception types shared across the toolkit."""


class PosconError(Exception):
    """Base class for all toolkit errors."""


class SingularMatrix(PosconError):
    """A pivot smaller than the singularity threshold was met during factorization."""


class NotSymmetric(PosconError):
    """A matrix expected to be symmetric exceeded the symmetry tolerance."""


class Overflow(PosconError):
    """An intermediate value left the representable floating-point range."""


class UnsupportedDimension(PosconError):
    """The requested operation is only implemented for small dimensions."""


class NoSolution(PosconError):
    """A linear matrix equation admits no solution within tolerance."""


class Infeasible(PosconError):
    """No certificate satisfying the synthesis inequalities was found.

    Carries the best margins seen during the search so callers can diagnose
    how far from feasibility the best candidate was.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DisconnectedGraph(PosconError):
    """An operation requiring connectivity met a graph with lambda2 <= 0."""


class InvariantViolation(PosconError):
    """A synthesized quantity failed one of its guaranteed structural properties."""


class DimensionMismatch(PosconError):
    """Matrix or vector dimensions are incompatible."""


class NonnegativityViolation(PosconError):
    """An initial condition required to be nonnegative has a negative entry."""


class NonFiniteState(PosconError):
    """The integrated state exceeded the divergence guard."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class MissingCertificate(PosconError):
    """Automatic kappa computation was requested without certificate data."""


class ParseError(PosconError):
    """A scenario configuration file could not be parsed or validated.

    ``location`` is a dotted path into the document (e.g. ``agents[2].A``).
    """

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
