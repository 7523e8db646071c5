"""Exception hierarchy shared by every module of the package."""

from fractions import Fraction


class CarError(Exception):
    """Base class for all errors raised by carcheck."""


class InputError(CarError):
    """A value handed to the library violates a documented contract."""


class NormalizationError(InputError):
    def __init__(self, what, defect, state=None):
        self.state = state
        self.defect = Fraction(defect)
        where = f" for state {state!r}" if state is not None else ""
        super().__init__(f"{what}{where} does not sum to 1 (defect {self.defect})")


class MembershipError(InputError):
    def __init__(self, state, subset):
        self.state = state
        self.subset = subset
        super().__init__(f"state {state!r} has positive mass on {subset} but is not a member")


class EmptyObservation(InputError):
    pass


class SpaceMismatch(InputError):
    pass


class DimensionError(InputError):
    pass


class ShapeError(InputError):
    pass


class ZeroMarginal(InputError):
    pass


class ZeroObservation(InputError):
    pass


class ZeroEvent(InputError):
    pass


class EmptySupport(InputError):
    pass


class UncoveredNode(InputError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node!r} is not contained in any edge")


class EmptyEdge(InputError):
    def __init__(self, edge):
        self.edge = edge
        super().__init__(f"edge {edge!r} contains no node")


class NotCar(InputError):
    pass


class NotCcar(InputError):
    pass


class NotHonest(InputError):
    pass


class UnbiasednessViolation(InputError):
    pass


class NonterminatingSpec(InputError):
    pass


class CoarseningError(InputError):
    """A coarsening variable or procedural model is malformed."""


class LimitExceeded(CarError):
    """An exhaustive search would exceed its configured cap.

    This never encodes a mathematical verdict; callers report it as
    "undecided".
    """


class CoverExplosion(LimitExceeded):
    pass


class StateExplosion(LimitExceeded):
    pass


class InternalInconsistency(CarError):
    """Two computations that must agree did not. Always a bug."""


class PartitionFailure(InternalInconsistency):
    pass


class ParseError(InputError):
    """A model file is not well-formed."""


class ValidationError(InputError):
    """A model file parsed but describes an invalid model."""

    def __init__(self, message, cause=None):
        self.cause = cause
        super().__init__(message)
