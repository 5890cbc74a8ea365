"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`DeplabError`; argument problems additionally derive from
``ValueError`` so ordinary ``except ValueError`` handlers keep working.
"""


class DeplabError(Exception):
    """Base class for package errors."""


class ArgumentError(DeplabError, ValueError):
    """Invalid argument (unknown id, out-of-range index, bad policy...)."""


class ParseError(DeplabError, ValueError):
    """Malformed input file. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SampleTooSmallError(ArgumentError):
    pass


class DomainError(ArgumentError):
    """Non-finite value in the input."""


class TieBreakSeedRequired(ArgumentError):
    """X contains ties and no seed was given to break them."""


class TiesNotSupported(ArgumentError):
    """The statistic assumes continuous margins but the sample has ties."""


class DegenerateSampleError(DeplabError, ValueError):
    """Constant Y, zero score variance and similar degenerate inputs."""


class NumericError(DeplabError, ArithmeticError):
    """Quadrature or eigensolver failed to converge."""


class EnvelopeError(DeplabError):
    """Rejection sampler envelope does not dominate the density."""


class UnsupportedStatisticError(ArgumentError):
    pass
