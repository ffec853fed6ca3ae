"""Exception hierarchy shared by every ilslab module."""


class IlslabError(ValueError):
    """Base class for all ilslab errors."""


class RankDeficient(IlslabError):
    pass


class NotStrictQuotient(IlslabError):
    pass


class DegenerateScale(IlslabError):
    pass


class SolverTolerance(IlslabError):
    """The l1/linf optimizer could not certify the requested tolerance."""


class DuplicateBasePoints(IlslabError):
    pass


class InvalidMetric(IlslabError):
    pass


class InvalidWeights(IlslabError):
    pass


class NotOnFiber(IlslabError):
    """A section value violates ``A x = scale * b`` beyond tolerance."""

    def __init__(self, index, residual):
        self.index = int(index)
        self.residual = float(residual)
        super().__init__(f"value {self.index} is off its fiber (residual {self.residual:.3e})")


class NonFiniteValues(IlslabError):
    pass


class MixedBases(IlslabError):
    pass


class ZeroCoefficient(IlslabError):
    pass


class TooFewPoints(IlslabError):
    pass


class AdmissibilityViolated(IlslabError):
    pass


class BadSchedule(IlslabError):
    pass


class BadExponent(IlslabError):
    pass


class EmptyBall(IlslabError):
    def __init__(self, index, eps):
        self.index = int(index)
        self.eps = float(eps)
        super().__init__(f"point {self.index} has no neighbour within radius {self.eps}")


class NotAdmissible(IlslabError):
    pass


class EmptyInput(IlslabError):
    pass


class UnverifiedCertificate(IlslabError):
    pass


class MinimalityViolated(IlslabError):
    pass


class BadDims(IlslabError):
    pass


class ParseError(IlslabError):
    pass


class ValidationError(IlslabError):
    """Instance validation failure carrying the offending field path."""

    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
