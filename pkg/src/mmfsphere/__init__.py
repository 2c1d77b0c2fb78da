"""Spectral-element DG on the cubed sphere with moving frames.

The package tracks how the geometric approximation error of the mesh
(distance of the high-order element maps from the true sphere) limits
the accuracy and conservation of surface differential operators and of
hyperbolic/parabolic solvers built on top of them.
"""

from .errors import (
    ConfigError,
    DegenerateElement,
    MeshFormatError,
    MMFSphereError,
    NonConformingEdge,
    NonFiniteState,
    OrderOutOfRange,
    PoleProximity,
    PositivityLoss,
    SchemaMismatch,
    SpringNonConvergence,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateElement",
    "MeshFormatError",
    "MMFSphereError",
    "NonConformingEdge",
    "NonFiniteState",
    "OrderOutOfRange",
    "PoleProximity",
    "PositivityLoss",
    "SchemaMismatch",
    "SpringNonConvergence",
    "__version__",
]
