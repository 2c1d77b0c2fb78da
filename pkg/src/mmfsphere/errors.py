"""Exception types shared across the package."""


class MMFSphereError(Exception):
    """Base class for all package-specific errors."""


class OrderOutOfRange(MMFSphereError):
    """Polynomial order outside the supported range."""


class DegenerateElement(MMFSphereError):
    """Element mapping produced a non-positive or non-finite Jacobian."""


class NonConformingEdge(MMFSphereError):
    """Interior edge whose two sides disagree geometrically."""


class SpringNonConvergence(MMFSphereError):
    """Interior-node spring relaxation failed to reach tolerance."""


class PoleProximity(MMFSphereError):
    """Spherical frame alignment requested where the east direction degenerates."""


class NonFiniteState(MMFSphereError):
    """Time integration produced NaN or Inf values."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ComplexDeltaN(MMFSphereError):
    """Reaction-diffusion mode splitting is oscillatory (negative discriminant)."""


class PositivityLoss(MMFSphereError):
    """Water depth lost positivity during a shallow-water run."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class MeshFormatError(MMFSphereError):
    """Mesh file violates the documented schema or a mesh invariant."""


class SchemaMismatch(MMFSphereError):
    """Two diagnostics series cannot be compared column-for-column."""


class ConfigError(MMFSphereError):
    """Run configuration failed schema validation."""
