"""Exception hierarchy.

Usage errors derive from :class:`InvalidArgument` (a ``ValueError``); every
failure of a numerical procedure derives from :class:`NumericalError`, which
the command line maps to exit code 1.
"""


class InvalidArgument(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


class SingularEvaluation(NumericalError):
    """A singular weight was evaluated exactly on its singular set."""


class InvalidWeight(NumericalError):
    pass


class AccuracyNotReached(NumericalError):
    """Refinement stopped before the requested tolerance was met.

    The best available estimate is kept on the exception.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateBasis(NumericalError):
    def __init__(self, message, multi_index=None):
        super().__init__(message)
        self.multi_index = multi_index


class InconsistentExpansion(NumericalError):
    pass


class FitUndefined(NumericalError):
    pass


class CannotDeriveConstant(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class RuleConstructionFailed(NumericalError):
    def __init__(self, message, lam=None, residual=None):
        super().__init__(message)
        self.lam = lam
        self.residual = residual
