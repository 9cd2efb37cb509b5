"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`MreError`,
which itself is a ``ValueError`` so callers that only care about bad input can
catch the builtin.
"""


class MreError(ValueError):
    pass


class LengthMismatch(MreError):
    pass


class NegativeWeight(MreError):
    pass


class ZeroTotal(MreError):
    pass


class SpaceMismatch(MreError):
    pass


class ZeroProbabilityEvent(MreError):
    """Conditioning on an event that carries no prior mass."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonpositivePlausibility(MreError):
    pass


class Infeasible(MreError):
    """The constraint set admits no distribution absolutely continuous w.r.t. the prior."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class AllMassExcluded(Infeasible):
    pass


class UnboundedDual(Infeasible):
    """A moment target lies outside the hull of achievable values."""


class NotConverged(MreError):
    """Newton iteration stopped before the KKT residual reached tolerance.

    The best iterate is attached as ``solution``.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class ThetaOutOfDomain(MreError):
    pass


class DegenerateData(MreError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class UnachievableSum(MreError):
    pass
