"""Exception types shared across the package."""


class RedimlabError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(RedimlabError, ValueError):
    """A vector or matrix has a length inconsistent with the model."""


class NonFiniteEvaluationError(RedimlabError, ArithmeticError):
    """A function evaluation returned NaN or infinity.

    Attributes
    ----------
    coordinate : int or None
        Index of the perturbed coordinate at which the evaluation failed.
    """

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class RankDeficientError(RedimlabError, ValueError):
    """The sample matrix of a least-squares fit is numerically rank deficient."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class NoSpectralGapError(RedimlabError, ValueError):
    """No usable gap between consecutive eigenvalue moduli."""

    def __init__(self, message, ratios=None):
        super().__init__(message)
        self.ratios = ratios


class ComplexPairSplitError(RedimlabError, ValueError):
    """A requested spectrum split would separate a complex-conjugate pair."""

    def __init__(self, message, proposed=None):
        super().__init__(message)
        self.proposed = proposed


class TurningPointError(RedimlabError, ArithmeticError):
    """The fast-block Jacobian is numerically singular at the evaluation point.

    Attributes
    ----------
    det : float
        Magnitude of the determinant that failed the invertibility threshold.
    """

    def __init__(self, message, det=None):
        super().__init__(message)
        self.det = det


class NewtonDivergenceError(RedimlabError, ArithmeticError):
    """A Newton iteration failed to converge within its budget."""


class BracketSearchError(RedimlabError, ValueError):
    """No sign change was found for a 1D root bracket.

    Attributes
    ----------
    interval : tuple of float
        The searched interval.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class ConfigurationError(RedimlabError, ValueError):
    """Invalid run configuration (bad enum value, unwritable path, ...)."""
