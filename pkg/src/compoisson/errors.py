"""Exception hierarchy.

``ParameterError`` signals a violated domain invariant (a usage problem);
every other subclass of ``CmpError`` is a numeric failure.
"""


class CmpError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CmpError, ValueError):
    """A parameter record or argument violates its domain invariant."""


class NumericRangeError(CmpError, OverflowError):
    """A quantity is not representable in double precision."""


class DivergenceError(CmpError, ArithmeticError):
    """A series could not be certified convergent within the term budget."""


class ExistenceError(DivergenceError):
    """A power sum needed by a COM-type transform or entropy cannot be certified finite."""


class TailTooHeavyError(CmpError, ValueError):
    """The stored window misses too much mass for the requested operation."""


class WindowMassError(TailTooHeavyError):
    """The window mass is below what a characterization check needs."""


class ZeroMassError(CmpError, ZeroDivisionError):
    """A probability that must be positive is zero."""


class RSPViolationError(CmpError, ValueError):
    """A law is not right-side positive on its window."""


class InfiniteInformationError(CmpError, ArithmeticError):
    """A Fisher information is infinite or degenerate."""


class PseudoParametersError(CmpError, ValueError):
    """Compound Poisson sampling requested for parameters with negative weights."""
