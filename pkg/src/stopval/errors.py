"""Exception types raised by the solver library."""


class StopvalError(Exception):
    """Base class for all library errors."""


class ValidationError(StopvalError, ValueError):
    """An input object violates its invariants (not a probability vector, etc.)."""


class ZeroProbabilitySignal(StopvalError):
    """Conditioning on a signal whose marginal probability is zero."""


class NotContractive(StopvalError):
    """The Markov transition does not satisfy the contraction condition."""


class InvalidGarbling(ValidationError):
    """A garbling matrix is not row-stochastic."""


class TreeTooLarge(StopvalError):
    """The history tree would exceed the configured node budget."""


class NonConvergence(StopvalError):
    """Value iteration hit its sweep cap before reaching the tolerance."""


class InvalidDiscount(ValidationError):
    """A discount factor lies outside (0, 1]."""


class InvalidSetup(ValidationError):
    """A Gaussian stopping setup is degenerate (prior already past the threshold)."""


class NoCrossing(StopvalError):
    """Expected stopping times never change order over the prior range."""


class CounterexampleFound(StopvalError):
    """A sampled fee scheme extracted more than the value of information.

    Carries the violating scheme; this signals a bug, never an expected outcome.
    """

    def __init__(self, message, scheme, rho, phi):
        super().__init__(message)
        self.scheme = scheme
        self.rho = rho
        self.phi = phi
