"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`BilinopError`.
Errors that signal an unmet precondition of an experiment (bad grid, frequencies
past Nyquist, ...) additionally derive from :class:`PreconditionError`; the CLI
maps those to exit code 2.
"""


class BilinopError(Exception):
    pass


class PreconditionError(BilinopError):
    pass


class GridMismatch(BilinopError, ValueError):
    pass


class IndexOutOfRange(BilinopError, IndexError):
    pass


class InvalidExponent(BilinopError, ValueError):
    pass


class AliasingRisk(PreconditionError):
    pass


class GridTooSmall(PreconditionError):
    pass


class NyquistViolation(PreconditionError):
    pass


class BadCutoffSpec(PreconditionError):
    pass


class NotMultiplier(BilinopError, TypeError):
    pass


class StrategyMismatch(BilinopError, ValueError):
    pass


class TruncationTooAggressive(BilinopError):
    pass


class CoverageGap(BilinopError):
    """Raised when a set of (j, l) cells leaves sampled frequencies uncovered."""

    def __init__(self, message, uncovered=None):
        super().__init__(message)
        self.uncovered = uncovered if uncovered is not None else []
