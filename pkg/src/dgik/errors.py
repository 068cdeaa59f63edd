"""Exception types raised by the solver library."""


class DgikError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(DgikError, ValueError):
    pass


class LengthMismatch(DgikError, ValueError):
    pass


class DegenerateAnchors(DgikError):
    """Anchor sets whose centered coordinates do not span the ambient space."""


class RankDeficientBase(DgikError):
    """Base point of the quotient manifold lost full column rank."""


class DegenerateModelDecrease(DgikError):
    """Trust-region model predicts no decrease for the candidate step."""


class DegenerateGeometry(DgikError):
    pass


class DegenerateDirectionGoal(DgikError, ValueError):
    pass


class LimitNotRepresentable(DgikError):
    """A symmetric joint limit has no distance-interval encoding for this geometry."""


class MalformedGraph(DgikError, ValueError):
    pass


class DisconnectedGraph(DgikError):
    pass


class NegativeCycleError(DgikError):
    """Bound propagation found lower > upper on some pair: the constraints are infeasible."""


class InvalidCounts(DgikError, ValueError):
    pass


class InvalidModel(DgikError, ValueError):
    pass
