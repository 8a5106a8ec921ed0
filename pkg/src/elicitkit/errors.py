"""Exception hierarchy for elicitkit.

Every error raised on bad input derives from :class:`ElicitError`, which is a
``ValueError`` so callers that only care about "bad input" can catch that.
"""


class ElicitError(ValueError):
    """Base class for all toolkit errors."""


# distributions
class LengthMismatch(ElicitError):
    pass


class NegativeProbability(ElicitError):
    pass


class ZeroTotalMass(ElicitError):
    pass


class NotNormalized(ElicitError):
    """Probabilities sum to something other than 1 beyond the input tolerance."""


class LambdaOutOfRange(ElicitError):
    pass


class NonFiniteValue(ElicitError):
    pass


class AlphaOutOfRange(ElicitError):
    pass


class EmptySample(ElicitError):
    pass


class InvalidInterval(ElicitError):
    pass


# properties / losses
class InvalidParameter(ElicitError):
    pass


class UnsupportedSpec(ElicitError):
    pass


class FNotMonotone(ElicitError):
    pass


class GNotConvex(ElicitError):
    pass


class InvalidWeightPair(ElicitError):
    pass


# erm
class DomainMismatch(ElicitError):
    pass


class NonFiniteObjective(ElicitError):
    pass


class DimensionTooLarge(ElicitError):
    pass


# identification
class DimensionMismatch(ElicitError):
    pass


class EmptyFamily(ElicitError):
    pass


class FamilyTooSmall(ElicitError):
    pass


class NotOnLevelSet(ElicitError):
    pass


# analysis
class PairNotOnCommonLevelSet(ElicitError):
    pass


class PairOnSameLevelSet(ElicitError):
    pass


# cli
class ParseError(ElicitError):
    pass


class FixtureExpectationMismatch(ElicitError):
    pass
