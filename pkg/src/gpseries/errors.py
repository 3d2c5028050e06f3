"""Exception hierarchy shared by every module of the package."""


class GSeriesError(Exception):
    """Base class for all errors raised by gpseries."""


class ValidationError(GSeriesError):
    """Input rejected before any computation started."""


class ComputationError(GSeriesError):
    """A computation could not be completed."""


# lattice

class NonTerminating(ComputationError):
    def __init__(self, bound):
        super().__init__(f"minimal-element enumeration exceeded coordinate bound {bound}")
        self.bound = bound


class DependencyUndetected(ComputationError):
    pass


class NotRepresentable(ComputationError):
    def __init__(self, target, bound):
        super().__init__(f"{target} is not a lattice value with |m| <= {bound}")
        self.target = target
        self.bound = bound


class AmbiguousRepresentation(ComputationError):
    def __init__(self, target, vectors):
        super().__init__(f"{target} has several representations: {vectors}")
        self.target = target
        self.vectors = vectors


# series

class SemigroupMismatch(ValidationError):
    pass


class NonPositiveLeadingExponent(ValidationError):
    pass


class UncertifiedSemigroup(ValidationError):
    pass


class CapacityExceeded(ComputationError):
    pass


# equations and solving

class NotSatisfied(ComputationError):
    """Leading-term hypotheses fail; ``details`` carries diagnostics."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class DegenerateEquation(ValidationError):
    pass


class ResonanceBlocked(ComputationError):
    def __init__(self, where, divisor, rhs):
        super().__init__(f"vanishing divisor at {where} with nonzero right-hand side {rhs}")
        self.where = where
        self.divisor = divisor
        self.rhs = rhs


class PrefixTooShort(ComputationError):
    pass


class SmallDivisorBreakdown(ComputationError):
    def __init__(self, k, value):
        super().__init__(f"|q^{k} - 1| = {value} is below the working threshold")
        self.k = k
        self.value = value


class NonLinearizable(ComputationError):
    pass


class ConjugatorUnavailable(ComputationError):
    pass


# convergence

class RootInHalfPlane(ComputationError):
    def __init__(self, root):
        super().__init__(f"shifted symbol has a root {root} with nonnegative real part")
        self.root = root


class AlphaUncertified(ComputationError):
    pass


class RationalInput(ValidationError):
    pass


# DSL

class ParseError(ValidationError):
    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownOperator(ParseError):
    pass


class MixedOperators(ValidationError):
    pass
