"""Exception hierarchy shared by the library and the CLI."""


class WeakflowError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(WeakflowError, ValueError):
    pass


class NotHermitian(WeakflowError, ValueError):
    pass


class NotNormalized(WeakflowError, ValueError):
    pass


class DomainError(WeakflowError):
    """Physically undefined request (CLI exit code 2)."""


class OrthogonalSelection(DomainError):
    """|<f|i>| fell below the admissible overlap floor."""


class NullWeakValue(DomainError):
    """A_w vanished, so the probability ratio is undefined."""


class PostselectionStarved(DomainError):
    """Post-selection success probability is numerically zero."""


class TailTruncation(WeakflowError, ValueError):
    """Pointer grid too narrow to hold the Gaussian detector state."""


class NumericalFailure(WeakflowError):
    """Degenerate amplitude or non-finite intermediate (CLI exit code 3)."""


class DegeneratePhase(NumericalFailure):
    pass


class ConfigError(WeakflowError, ValueError):
    """Invalid or unknown configuration (CLI exit code 1)."""
