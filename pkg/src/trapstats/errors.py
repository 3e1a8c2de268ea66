"""Exception hierarchy.

ValidationError covers bad inputs (CLI exit code 1), NumericalError covers
solver-level failures on inputs that passed validation (CLI exit code 2).
"""


class TrapstatsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TrapstatsError, ValueError):
    """Invalid parameters, domains, or preconditions."""


class NoClosedFormError(ValidationError):
    """Parameter set lies outside every closed-form asymptotic regime."""


class NumericalError(TrapstatsError, RuntimeError):
    """A solver failed on otherwise valid input."""


class StiffnessError(NumericalError):
    """Adaptive integrator step size underflowed.

    Carries the time at which integration stalled in .time.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NonUniqueSteadyStateError(NumericalError):
    """The generator has more than one recurrent class, so the steady
    state is not unique (e.g. R=0, gamma=0 with a pair-loss channel leaves
    both N=0 and N=1 absorbing)."""
