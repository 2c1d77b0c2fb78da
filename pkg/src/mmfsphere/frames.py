"""Orthonormal moving frames per quadrature point, plus their connections.

Two alignments.  ``local`` follows the element map: e1 along the first
mapping tangent, e3 the surface normal, e2 completing a right-handed
triad.  ``spherical`` aligns e1 with geographic east and e3 with the
radial direction at the (possibly off-sphere) mapped point.  Spherical
alignment is singular where east is undefined, so elements containing a
quadrature point at |z|/|x| > 1 - 1e-8 either fall back to local frames
(default, recorded in ``spherical_mask``) or raise ``PoleProximity``.

Frames need not be continuous across elements; every derived quantity
is element-local.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PoleProximity
from .sem import ElementGeometry, grad_physical

POLE_Z = 1.0 - 1e-8

_ALIGNMENTS = ("local", "spherical")


@dataclass
class MovingFrames:
    """Per-point orthonormal triads e1, e2, e3 with e1 x e2 = e3."""

    alignment: str
    e1: np.ndarray  # (E, m, m, 3)
    e2: np.ndarray
    e3: np.ndarray
    spherical_mask: np.ndarray  # (E,) True where spherical alignment is in effect

    def __post_init__(self):
        for arr in (self.e1, self.e2, self.e3, self.spherical_mask):
            arr.flags.writeable = False


@dataclass
class Connections:
    """Divergence, radial curl and Christoffel entries of the frame field.

    ``gamma211`` is (grad_{e1} e1).e2, ``gamma212`` is (grad_{e2} e1).e2
    and ``gamma221`` is (grad_{e1} e2).e2 (identically zero for unit e2,
    kept as a consistency diagnostic).
    """

    div_e1: np.ndarray
    div_e2: np.ndarray
    curl3_e1: np.ndarray
    curl3_e2: np.ndarray
    curl_e3_on_e1: np.ndarray
    curl_e3_on_e2: np.ndarray
    gamma211: np.ndarray
    gamma212: np.ndarray
    gamma221: np.ndarray


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("eijc,eijc->eij", a, b)


def pole_elements(geometry: ElementGeometry) -> np.ndarray:
    """Boolean (E,) mask of elements with a quadrature point at a pole."""
    zfrac = np.abs(geometry.x[..., 2]) / np.linalg.norm(geometry.x, axis=-1)
    return np.any(zfrac > POLE_Z, axis=(1, 2))


def build_frames(geometry: ElementGeometry, alignment: str = "local",
                 strict: bool = False) -> MovingFrames:
    """Construct the frame field for one alignment.

    With ``strict`` and spherical alignment, raises PoleProximity when
    any element touches a pole; otherwise such elements silently get
    local frames and ``spherical_mask`` is False there.
    """
    if alignment not in _ALIGNMENTS:
        raise ValueError(f"alignment must be one of {_ALIGNMENTS}, got {alignment!r}")

    t1 = geometry.t1
    e1 = t1 / np.linalg.norm(t1, axis=-1, keepdims=True)
    e3 = geometry.normal
    e2 = np.cross(e3, e1)
    n_elem = geometry.n_elements

    if alignment == "local":
        return MovingFrames("local", e1, e2, e3,
                            np.zeros(n_elem, dtype=bool))

    polar = pole_elements(geometry)
    if strict and polar.any():
        raise PoleProximity(
            f"{int(polar.sum())} elements touch a pole; spherical frames "
            "are undefined there")

    radial = geometry.x / np.linalg.norm(geometry.x, axis=-1, keepdims=True)
    east = np.cross([0.0, 0.0, 1.0], radial)
    east_len = np.linalg.norm(east, axis=-1, keepdims=True)
    east = east / np.where(east_len > 1e-14, east_len, 1.0)

    mask = ~polar
    sel = mask[:, None, None, None]
    s_e1 = np.where(sel, east, e1)
    s_e3 = np.where(sel, radial, e3)
    s_e2 = np.cross(s_e3, s_e1)
    return MovingFrames("spherical", s_e1, s_e2, s_e3, mask)


def directional_derivatives(w: np.ndarray, frames: MovingFrames,
                            geometry: ElementGeometry):
    """Surface derivatives of a Cartesian vector field along e1 and e2.

    Each Cartesian component of ``w`` is differentiated as an element
    scalar; returns (dw/de1, dw/de2), both (E, m, m, 3).
    """
    d1 = np.empty_like(w)
    d2 = np.empty_like(w)
    for c in range(3):
        g = grad_physical(w[..., c], geometry)
        d1[..., c] = _dot(g, frames.e1)
        d2[..., c] = _dot(g, frames.e2)
    return d1, d2


def surface_curl(w: np.ndarray, frames: MovingFrames,
                 geometry: ElementGeometry) -> np.ndarray:
    """Vector surface curl e1 x dw/de1 + e2 x dw/de2, shape (E, m, m, 3)."""
    d1, d2 = directional_derivatives(w, frames, geometry)
    return np.cross(frames.e1, d1) + np.cross(frames.e2, d2)


def build_connections(frames: MovingFrames,
                      geometry: ElementGeometry) -> Connections:
    """Differentiate the frame field itself.

    On exact spherical frames (east, north, radial): div e1 = 0,
    div e2 = -cot(theta), curl3 e1 = cot(theta), curl3 e2 = 0,
    curl e3 = 0, gamma211 = cot(theta), gamma212 = gamma221 = 0,
    with theta the colatitude.  Two identities tie the entries
    together: curl3_e1 = -div_e2 and curl3_e2 = div_e1.
    """
    d1e1, d2e1 = directional_derivatives(frames.e1, frames, geometry)
    d1e2, d2e2 = directional_derivatives(frames.e2, frames, geometry)
    d1e3, d2e3 = directional_derivatives(frames.e3, frames, geometry)

    curl_e1 = np.cross(frames.e1, d1e1) + np.cross(frames.e2, d2e1)
    curl_e2 = np.cross(frames.e1, d1e2) + np.cross(frames.e2, d2e2)
    curl_e3 = np.cross(frames.e1, d1e3) + np.cross(frames.e2, d2e3)

    return Connections(
        div_e1=_dot(d1e1, frames.e1) + _dot(d2e1, frames.e2),
        div_e2=_dot(d1e2, frames.e1) + _dot(d2e2, frames.e2),
        curl3_e1=_dot(curl_e1, frames.e3),
        curl3_e2=_dot(curl_e2, frames.e3),
        curl_e3_on_e1=_dot(curl_e3, frames.e1),
        curl_e3_on_e2=_dot(curl_e3, frames.e2),
        gamma211=_dot(d1e1, frames.e2),
        gamma212=_dot(d2e1, frames.e2),
        gamma221=_dot(d1e2, frames.e2),
    )
