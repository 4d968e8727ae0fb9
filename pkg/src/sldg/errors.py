"""Exception types raised by the solver."""


class MeshFormatError(ValueError):
    """Mesh file could not be parsed; message carries the line number."""


class TopologyError(ValueError):
    """Mesh connectivity is invalid (non-manifold edge, open path, ...)."""


class DegenerateGeometryError(ValueError):
    """Zero-area element, coincident points, collinear vertex set."""


class GeometryError(RuntimeError):
    """A geometric predicate or construction failed in an unexpected way."""


class OrientationError(ValueError):
    """A boundary loop was traversed clockwise where CCW is required."""


class ParameterError(ValueError):
    """An out-of-range numeric parameter (bin size, quadrature order, ...)."""


class ContainmentError(ValueError):
    """A point was evaluated outside the element that owns it."""


class ConditioningError(RuntimeError):
    """A local solve (basis, least-squares fit) is too ill-conditioned."""


class StepSizeError(RuntimeError):
    """The time step folded an upstream element; reduce dt."""


class BoundaryTraceError(RuntimeError):
    """A traced characteristic left the domain by more than the allowance."""


class RemapConsistencyError(RuntimeError):
    """Signed overlap areas failed to reproduce an upstream element's area."""
