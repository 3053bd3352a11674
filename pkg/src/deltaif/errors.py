"""Exception hierarchy.

Every error carries a machine-readable ``category`` and a distinct process
exit code so the command-line front end can report failures uniformly.
"""


class DeltaIFError(Exception):
    category = "error"
    exit_code = 1


class ValidationError(DeltaIFError, ValueError):
    category = "validation"
    exit_code = 2


class InputError(DeltaIFError):
    category = "input"
    exit_code = 3


class InsufficientSample(DeltaIFError, ValueError):
    category = "insufficient_sample"
    exit_code = 4


class DomainError(DeltaIFError, ValueError):
    """A function was evaluated outside its domain (log/sqrt of bad values)."""

    category = "domain"
    exit_code = 5


class DimensionError(DeltaIFError, ValueError):
    category = "dimension"
    exit_code = 6


class DenominatorNearZero(DeltaIFError, ArithmeticError):
    category = "denominator_near_zero"
    exit_code = 7


class BoundaryProportion(DeltaIFError, ValueError):
    category = "boundary_proportion"
    exit_code = 8


class DegenerateDensity(DeltaIFError, ArithmeticError):
    category = "degenerate_density"
    exit_code = 9


class DegenerateVariance(DeltaIFError, ArithmeticError):
    category = "degenerate_variance"
    exit_code = 10


class DegenerateCorrelation(DeltaIFError, ArithmeticError):
    category = "degenerate_correlation"
    exit_code = 11


class DegenerateSample(DeltaIFError, ValueError):
    category = "degenerate_sample"
    exit_code = 12


class RankDeficient(DeltaIFError, ArithmeticError):
    category = "rank_deficient"
    exit_code = 13


class Separation(DeltaIFError, ArithmeticError):
    category = "separation"
    exit_code = 14


class ResampleInstability(DeltaIFError):
    category = "resample_instability"
    exit_code = 15

    def __init__(self, message, failures=0):
        super().__init__(message)
        self.failures = failures


class UnsupportedDistribution(DeltaIFError, ValueError):
    category = "unsupported_distribution"
    exit_code = 16
