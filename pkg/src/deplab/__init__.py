"""Rank-based dependence measures and local-power experiments."""

__version__ = "0.1.0"

from .errors import (ArgumentError, DeplabError, DegenerateSampleError, EnvelopeError,
                     NumericError, ParseError, TiesNotSupported, UnsupportedStatisticError)
from .sample import EmpiricalCopula, PairedSample, RankData, compute_ranks, ingest_csv

__all__ = [
    "ArgumentError", "DeplabError", "DegenerateSampleError", "EnvelopeError",
    "NumericError", "ParseError", "TiesNotSupported", "UnsupportedStatisticError",
    "EmpiricalCopula", "PairedSample", "RankData", "compute_ranks", "ingest_csv",
]
