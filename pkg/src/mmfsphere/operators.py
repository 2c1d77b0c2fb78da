"""Surface differential operators in frame components.

Each operator comes in two formulations: a ``direct`` one that applies
the chain rule and the frame connection pointwise, and a ``weak`` one
that integrates against test functions with interface fluxes, as a DG
solver would.  The weak forms are where the mesh's geometric
approximation error shows up as an error floor.

Vector fields are handled as frame component pairs (v1, v2), scalars as
nodal arrays.  The analytic wavenumber-4 test fields used by the
convergence studies live here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import PoleProximity
from .frames import Connections, MovingFrames, build_connections, build_frames
from .sem import (
    ElementGeometry,
    compute_geometry,
    element_traces,
    exchange_traces,
    grad_physical,
    l2_norm,
    lift_edge_flux,
    linf_norm,
    make_reference_element,
    weak_gradient_volume,
)
from .sphere_mesh import build_sphere_mesh


@dataclass(frozen=True)
class RossbyHaurwitzParams:
    """Parameters of the wavenumber-4 test flow and scalar."""

    omega: float = 7.848e-6
    amplitude: float = 7.848e-6  # the second coefficient, equal by default
    wave_number: int = 4

    def __post_init__(self):
        if self.wave_number != 4:
            raise ValueError("the analytic reference fields are derived for "
                             "wave number 4")


@dataclass
class OperatorResult:
    """Computed nodal values plus normalized error norms vs the reference."""

    values: tuple
    l2_error: float
    linf_error: float


def _angles(points: np.ndarray):
    """Colatitude/longitude of radially projected points, plus trig caches."""
    p = points / np.linalg.norm(points, axis=-1, keepdims=True)
    cos_t = np.clip(p[..., 2], -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(1.0 - cos_t * cos_t, 0.0))
    phi = np.arctan2(p[..., 1], p[..., 0])
    return cos_t, sin_t, phi


def east_north(points: np.ndarray):
    """Unit east and north tangent vectors at (projected) points.

    At the poles both directions are undefined and zero vectors are
    returned; the analytic fields built on them vanish there and the
    study norms exclude the pole caps anyway.
    """
    p = points / np.linalg.norm(points, axis=-1, keepdims=True)
    east = np.cross([0.0, 0.0, 1.0], p)
    east /= np.maximum(np.linalg.norm(east, axis=-1, keepdims=True), 1e-300)
    north = np.cross(p, east)
    return east, north


def rh_velocity(points: np.ndarray, params: RossbyHaurwitzParams = RossbyHaurwitzParams()):
    """Components (v_phi, v_theta) of the rotating wavenumber-4 flow.

    v_phi multiplies the unit east vector, v_theta the unit NORTH
    vector; with that convention the field is exactly solenoidal on the
    sphere (the divergence studies rely on it).
    """
    cos_t, sin_t, phi = _angles(points)
    w, k = params.omega, params.amplitude
    v_phi = w * sin_t + k * sin_t**3 * (4 * cos_t**2 - sin_t**2) * np.cos(4 * phi)
    v_theta = -4 * k * sin_t**3 * cos_t * np.sin(4 * phi)
    return v_phi, v_theta


def rh_velocity_cartesian(points: np.ndarray,
                          params: RossbyHaurwitzParams = RossbyHaurwitzParams()):
    v_phi, v_theta = rh_velocity(points, params)
    east, north = east_north(points)
    return v_phi[..., None] * east + v_theta[..., None] * north


def rh_scalar(points: np.ndarray,
              params: RossbyHaurwitzParams = RossbyHaurwitzParams()):
    """Scalar with the same shape as the east velocity component."""
    cos_t, sin_t, phi = _angles(points)
    w, k = params.omega, params.amplitude
    return w * sin_t + k * sin_t**3 * (4 * cos_t**2 - sin_t**2) * np.cos(4 * phi)


def rh_curl_exact(points: np.ndarray,
                  params: RossbyHaurwitzParams = RossbyHaurwitzParams()):
    """Reference radial curl of the test flow (study sign convention)."""
    cos_t, sin_t, phi = _angles(points)
    w, k = params.omega, params.amplitude
    return -2 * w * cos_t + 30 * k * sin_t**4 * cos_t * np.cos(4 * phi)


def rh_gradient_exact_cartesian(points: np.ndarray,
                                params: RossbyHaurwitzParams = RossbyHaurwitzParams()):
    """Exact surface gradient of rh_scalar as a Cartesian field.

    d f/d theta = w cos + k sin^2 cos (12 - 25 sin^2) cos4phi (southward),
    (1/sin) d f/d phi = -4 k sin^2 (4 - 5 sin^2) sin4phi (eastward).
    """
    cos_t, sin_t, phi = _angles(points)
    w, k = params.omega, params.amplitude
    df_dtheta = (w * cos_t
                 + k * sin_t**2 * cos_t * (12 - 25 * sin_t**2) * np.cos(4 * phi))
    east_comp = -4 * k * sin_t**2 * (4 - 5 * sin_t**2) * np.sin(4 * phi)
    east, north = east_north(points)
    return east_comp[..., None] * east - df_dtheta[..., None] * north


def frame_components(w_cart: np.ndarray, frames: MovingFrames):
    """Project a Cartesian field on (e1, e2); the e3 part is discarded."""
    v1 = np.einsum("eijc,eijc->eij", w_cart, frames.e1)
    v2 = np.einsum("eijc,eijc->eij", w_cart, frames.e2)
    return v1, v2


def to_cartesian(v1: np.ndarray, v2: np.ndarray, frames: MovingFrames):
    return v1[..., None] * frames.e1 + v2[..., None] * frames.e2


def _directional(f: np.ndarray, direction: np.ndarray,
                 geometry: ElementGeometry) -> np.ndarray:
    return np.einsum("eijc,eijc->eij", grad_physical(f, geometry), direction)


# ---------------------------------------------------------------------------
# direct (pointwise) formulations

def divergence_direct(v1, v2, frames: MovingFrames, connections: Connections,
                      geometry: ElementGeometry) -> np.ndarray:
    """Covariant divergence via the Christoffel entries of the frame."""
    return (_directional(v1, frames.e1, geometry)
            + _directional(v2, frames.e2, geometry)
            - connections.gamma211 * v2 + connections.gamma212 * v1)


def curl_direct(v1, v2, frames: MovingFrames, connections: Connections,
                geometry: ElementGeometry) -> np.ndarray:
    """Radial curl via frame derivatives and connection terms.

    Sign convention matches the reference field of the curl study
    (rh_curl_exact); it is the negative of the outward-normal curl.
    """
    return (_directional(v1, frames.e2, geometry)
            - _directional(v2, frames.e1, geometry)
            - connections.curl3_e1 * v1 - connections.curl3_e2 * v2)


def gradient_direct(f, frames: MovingFrames, geometry: ElementGeometry):
    """Frame components of the surface gradient."""
    g = grad_physical(f, geometry)
    return (np.einsum("eijc,eijc->eij", g, frames.e1),
            np.einsum("eijc,eijc->eij", g, frames.e2))


# ---------------------------------------------------------------------------
# weak (integrated-by-parts) formulations

def _edge_frames(frames: MovingFrames):
    return (element_traces(frames.e1), element_traces(frames.e2),
            element_traces(frames.e3))


def _central_cartesian_trace(w_cart: np.ndarray, geometry: ElementGeometry):
    """Average of the two Cartesian reconstructions at each edge node."""
    tr = element_traces(w_cart)
    return 0.5 * (tr + exchange_traces(tr, geometry))


def divergence_weak(v1, v2, frames: MovingFrames,
                    geometry: ElementGeometry) -> np.ndarray:
    """Weak divergence: -int grad(phi).v + boundary flux of the central value.

    The interface state is the single-valued Cartesian average, but it
    is dotted with each side's own edge normal; on an imperfect mesh
    the two normals do not cancel, which is the conservation-defect
    mechanism under study.
    """
    w = to_cartesian(v1, v2, frames)
    wavg = _central_cartesian_trace(w, geometry)
    flux = np.einsum("elmc,elmc->elm", wavg, geometry.edge_normal)
    residual = lift_edge_flux(flux, geometry) - weak_gradient_volume(w, geometry)
    return residual * geometry.inv_mass


def curl_weak(v1, v2, frames: MovingFrames,
              geometry: ElementGeometry) -> np.ndarray:
    """Weak radial curl, same sign convention as curl_direct.

    Uses curl3(v) = div(e3 x v): volume term -int grad(phi).(e3 x v),
    boundary term with the central Cartesian state rotated by the
    element's own e3 at the edge.
    """
    w = to_cartesian(v1, v2, frames)
    rotated = np.cross(frames.e3, w)
    wavg = _central_cartesian_trace(w, geometry)
    e3_edge = element_traces(frames.e3)
    flux = np.einsum("elmc,elmc->elm", np.cross(e3_edge, wavg),
                     geometry.edge_normal)
    residual = (lift_edge_flux(flux, geometry)
                - weak_gradient_volume(rotated, geometry))
    return residual * geometry.inv_mass


def gradient_weak(f, frames: MovingFrames, geometry: ElementGeometry):
    """Weak surface gradient components with upwind interface states.

    Component i integrates f e^i by parts and subtracts the connection
    term f div(e^i); the interface value of f is taken from the side
    the direction e^i points away from (upwind in e^i.n).  The frame
    divergence in the connection term is the discrete weak one with the
    same one-sided boundary flux, so constant fields cancel exactly
    (free-stream preservation on curved elements).
    """
    f_self = element_traces(f)
    f_neigh = exchange_traces(f_self, geometry)
    out = []
    for ei in (frames.e1, frames.e2):
        ei_n = np.einsum("elmc,elmc->elm", element_traces(ei),
                         geometry.edge_normal)
        div_ei = (lift_edge_flux(ei_n, geometry)
                  - weak_gradient_volume(ei, geometry)) * geometry.inv_mass
        f_up = np.where(ei_n > 0.0, f_self, f_neigh)
        residual = (lift_edge_flux(f_up * ei_n, geometry)
                    - weak_gradient_volume(f[..., None] * ei, geometry))
        out.append(residual * geometry.inv_mass - f * div_ei)
    return tuple(out)


# ---------------------------------------------------------------------------
# convergence studies

OPERATOR_IDS = ("div-direct", "div-weak", "curl-direct", "curl-weak",
                "grad-direct", "grad-weak")


@dataclass
class StudyRow:
    p: int
    dof: int
    l2_error: float
    linf_error: float


POLE_CAP_COLAT = 0.15


def pole_cap_elements(geometry: ElementGeometry,
                      band: float = POLE_CAP_COLAT) -> np.ndarray:
    """Elements with a corner within colatitude ``band`` of either pole."""
    corners = geometry.x[:, [0, 0, -1, -1], [0, -1, 0, -1]]
    z = np.abs(corners[..., 2]) / np.linalg.norm(corners, axis=-1)
    return (z > np.cos(band)).any(axis=1)


def apply_operator(op_id: str, geometry: ElementGeometry, frames: MovingFrames,
                   connections: Connections,
                   params: RossbyHaurwitzParams) -> OperatorResult:
    """Evaluate one operator on its analytic test field.

    Error norms are relative: divergence against the velocity scale
    (the exact divergence is zero), curl and gradient against their
    exact reference fields.  Both norms share the quadrature-RMS
    reference scale on the same masked point set, so linf >= l2 by
    construction.  Pole-cap elements are always excluded: the gradient
    test scalar has conical points at the poles, which sit on mesh
    vertices here.
    """
    if op_id not in OPERATOR_IDS:
        raise ValueError(f"unknown operator id {op_id!r}")
    pts = geometry.x
    mask = ~pole_cap_elements(geometry)
    if frames.alignment == "spherical":
        mask &= frames.spherical_mask
    if not mask.any():
        raise PoleProximity("no elements left after pole-cap exclusion")

    if op_id.startswith("grad"):
        f = rh_scalar(pts, params)
        exact = rh_gradient_exact_cartesian(pts, params)
        if op_id == "grad-direct":
            g1, g2 = gradient_direct(f, frames, geometry)
        else:
            g1, g2 = gradient_weak(f, frames, geometry)
        err_c = to_cartesian(g1, g2, frames) - exact
        err = np.linalg.norm(err_c, axis=-1)
        scale = np.linalg.norm(exact, axis=-1)
        values = (g1, g2)
    else:
        v1, v2 = frame_components(rh_velocity_cartesian(pts, params), frames)
        if op_id == "div-direct":
            values = divergence_direct(v1, v2, frames, connections, geometry)
            err, scale = values, np.sqrt(v1 * v1 + v2 * v2)
        elif op_id == "div-weak":
            values = divergence_weak(v1, v2, frames, geometry)
            err, scale = values, np.sqrt(v1 * v1 + v2 * v2)
        else:
            exact = rh_curl_exact(pts, params)
            if op_id == "curl-direct":
                values = curl_direct(v1, v2, frames, connections, geometry)
            else:
                values = curl_weak(v1, v2, frames, geometry)
            err, scale = values - exact, exact
        values = (values,)

    scale_l2 = l2_norm(scale, geometry, mask)
    area = float(np.sum(geometry.jw * mask[:, None, None]))
    rms_scale = scale_l2 / np.sqrt(area)
    l2 = l2_norm(err, geometry, mask) / scale_l2
    linf = linf_norm(err, mask) / rms_scale
    return OperatorResult(values=values, l2_error=l2, linf_error=linf)


def run_operator_study(op_id: str, strategy, alignment: str, p_range,
                       n_per_face: int = 4,
                       params: RossbyHaurwitzParams = RossbyHaurwitzParams(),
                       progress: Callable[[str], None] | None = None):
    """Convergence table of one operator over a range of orders.

    The mesh is rebuilt at every order with p_geom = p.  Spherical
    alignment drops pole-cap elements from the norms.
    """
    rows = []
    for p in p_range:
        mesh = build_sphere_mesh(n_per_face, p, strategy)
        geometry = compute_geometry(mesh, make_reference_element(p))
        frames = build_frames(geometry, alignment)
        connections = build_connections(frames, geometry)
        res = apply_operator(op_id, geometry, frames, connections, params)
        dof = mesh.n_elements * (p + 1) ** 2
        rows.append(StudyRow(p=p, dof=dof, l2_error=res.l2_error,
                             linf_error=res.linf_error))
        if progress is not None:
            progress(f"{op_id} p={p} L2={res.l2_error:.3e}")
    return rows


def fitted_decay_decades_per_order(rows) -> float:
    """Least-squares slope of -log10(L2) vs p over the study rows."""
    p = np.array([r.p for r in rows], dtype=float)
    e = np.log10([max(r.l2_error, 1e-300) for r in rows])
    return float(-np.polyfit(p, e, 1)[0])


def tail_log_slope(rows, count: int = 3) -> float:
    """Mean |d log10 L2 / dp| over the last ``count`` rows (plateau gauge)."""
    tail = rows[-count:]
    p = np.array([r.p for r in tail], dtype=float)
    e = np.log10([max(r.l2_error, 1e-300) for r in tail])
    return float(abs(np.polyfit(p, e, 1)[0]))
