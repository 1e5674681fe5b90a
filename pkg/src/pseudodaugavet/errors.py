"""Exception hierarchy shared by all modules.

Every error is a ``ValueError`` subclass so callers that only care about
"bad input" can catch the builtin.
"""


class PseudoDaugavetError(ValueError):
    pass


# stepfn
class NonPositiveMeasure(PseudoDaugavetError):
    pass


class DuplicateLabel(PseudoDaugavetError):
    pass


class MeasureOverflow(PseudoDaugavetError):
    pass


class PartitionMismatch(PseudoDaugavetError):
    pass


class BadFractions(PseudoDaugavetError):
    pass


class UnknownLabel(PseudoDaugavetError, KeyError):
    pass


# lorentz / constants
class RangeError(PseudoDaugavetError):
    pass


class DomainError(PseudoDaugavetError):
    pass


class WeightSpecError(PseudoDaugavetError):
    pass


# perturb
class ZeroCoefficient(PseudoDaugavetError):
    pass


class NonPositiveEta(PseudoDaugavetError):
    pass


class IndexOutOfRange(PseudoDaugavetError, IndexError):
    pass


class DeltaOutOfRange(PseudoDaugavetError):
    pass


class RatioOutOfRange(PseudoDaugavetError):
    pass


# verify
class RatioConditionViolated(PseudoDaugavetError):
    pass


class PsiMismatch(PseudoDaugavetError):
    pass


class LambdaOutOfRange(PseudoDaugavetError):
    pass


class PreconditionViolated(PseudoDaugavetError):
    def __init__(self, clause, detail=""):
        self.clause = clause
        msg = clause if not detail else f"{clause}: {detail}"
        super().__init__(msg)


class BadArguments(PseudoDaugavetError):
    pass
