"""Exception types raised by the solver."""


class MeshError(ValueError):
    """Invalid mesh topology or geometry."""


class MeshParseError(MeshError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)


class ConditioningError(RuntimeError):
    """A local basis could not be orthonormalised.

    Raised when the Gram-Schmidt residual of a retained raw function is
    numerically zero, i.e. the raw basis is linearly dependent to machine
    precision.
    """

    def __init__(self, message, owner=None, kind=None, raw_condition=None):
        self.owner = owner
        self.kind = kind
        self.raw_condition = raw_condition
        super().__init__(message)


class SolverError(RuntimeError):
    """The global linear solve failed or produced an inaccurate solution."""
