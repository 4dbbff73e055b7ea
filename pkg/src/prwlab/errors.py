"""Exception hierarchy shared by all modules."""


class PRWError(Exception):
    """Base class for every error raised by prwlab."""


class LawError(PRWError, ValueError):
    """Invalid distribution descriptor or violated standing assumption."""


class UndefinedQuantity(PRWError, ArithmeticError):
    """An analytic quantity (e.g. J+ when P{xi>0}=0) does not exist."""


class AccuracyError(PRWError, ArithmeticError):
    """Numerical integration or root finding failed to reach its tolerance."""


class NoRootError(PRWError, ArithmeticError):
    """E exp(-g xi) = exp(-a) has no positive solution (a exceeds the rate R)."""


class PreconditionError(PRWError, ValueError):
    """An operation was called outside the regime where it is defined."""


class NotApplicable(PreconditionError):
    """A criterion was requested for a walk it does not cover."""


class DivergenceError(PreconditionError):
    """A series or truncated sum cannot be bounded for the given walk."""


class CouplingError(PreconditionError):
    """The operation needs independent xi and eta."""


class InsufficientSamples(PRWError, ValueError):
    """Too few samples for a moment estimate."""
