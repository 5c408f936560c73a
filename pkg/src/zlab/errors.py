"""Exception types shared across the package."""


class ZlabError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(ZlabError):
    """Malformed expression source; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class DimensionError(ZlabError):
    """A variable index exceeds the declared ambient dimension."""


class EvalError(ZlabError):
    """Evaluation hit a singular value (division by zero, log(0), branch cut)."""


class DimensionMismatch(ZlabError):
    """Vector arguments disagree with the metric's dimension."""


class OutsideDomain(ZlabError):
    """Base point is not interior to the domain."""


class NotHyperbolic(ZlabError):
    """Operation requires a hyperbolic domain (the full space is not)."""


class NotSupported(ZlabError):
    """No closed form is available for this domain variant."""


class TooFewPoints(ZlabError):
    """Not enough flagged points to fit the monomial basis."""


class NotMuPoint(ZlabError):
    """Rescaling base point was not flagged and no override was given."""


class NotConverged(ZlabError):
    """A limit comparison was requested on a non-convergent verdict."""


class InsufficientTail(ZlabError):
    """Fewer than four all-valid tail indices in the rescaled samples."""


class InvalidSchedule(ZlabError):
    """Index schedule is not strictly increasing / not geometric."""
