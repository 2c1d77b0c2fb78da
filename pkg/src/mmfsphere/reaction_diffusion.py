"""Coupled linear reaction-diffusion system on the sphere.

Two scalars diffuse with different coefficients and exchange through a
constant 2x2 reaction matrix.  The Laplacian is the mixed (LDG) form:
an auxiliary gradient q is built per frame direction with an
average/jump interface value, then its divergence is taken with a
penalized flux.  Jumps use a canonical orientation (the lower element
index is the minus side) so the interface states are single-valued.

A single real spherical harmonic evolves by the 2x2 mode matrix
M_n = [[-mu n(n+1) + a, b], [c, -nu n(n+1) + d]], which gives a closed
form to test against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import DiagnosticsSeries
from .errors import ComplexDeltaN
from .frames import MovingFrames
from .sem import (ElementGeometry, element_traces, exchange_traces,
                  integrate, l2_norm, lift_edge_flux, linf_norm,
                  weak_gradient_volume)
from .timestepping import advance


@dataclass(frozen=True)
class ReactionDiffusionParams:
    mu: float = 1e-3
    nu: float = 2e-3
    a: float = -6.0
    b: float = 4.0
    c: float = 5.0
    d: float = -4.0
    harmonic_n: int = 2
    harmonic_m: int = 1
    u_amp: float = 1.0
    v_amp: float = 0.5
    dt: float = 1e-4
    t_final: float = 1.0
    ldg_alpha: float = 200.0
    ldg_beta: float = 0.5

    def __post_init__(self):
        if self.a + self.d > 0:
            raise ValueError("reaction matrix must not have positive trace")
        if not 0 <= self.harmonic_m <= self.harmonic_n:
            raise ValueError("need 0 <= m <= n")

    def mode_matrix(self) -> np.ndarray:
        lam = self.harmonic_n * (self.harmonic_n + 1)
        return np.array([[-self.mu * lam + self.a, self.b],
                         [self.c, -self.nu * lam + self.d]])


def _assoc_legendre(n: int, m: int, x: np.ndarray) -> np.ndarray:
    """P_n^m(x) by the standard upward recurrence (unnormalized)."""
    pmm = np.ones_like(x)
    if m > 0:
        fact = 1.0
        somx2 = np.sqrt(np.maximum(1.0 - x * x, 0.0))
        for _ in range(m):
            pmm = -pmm * fact * somx2
            fact += 2.0
    if n == m:
        return pmm
    pmmp1 = x * (2 * m + 1) * pmm
    if n == m + 1:
        return pmmp1
    for ell in range(m + 2, n + 1):
        pmm, pmmp1 = pmmp1, ((2 * ell - 1) * x * pmmp1
                             - (ell + m - 1) * pmm) / (ell - m)
    return pmmp1


def real_harmonic(n: int, m: int, theta: np.ndarray,
                  phi: np.ndarray) -> np.ndarray:
    """Real surface harmonic P_n^m(cos theta) cos(m phi); Laplacian
    eigenvalue -n(n+1) regardless of normalization."""
    return _assoc_legendre(n, m, np.cos(theta)) * np.cos(m * phi)


def _harmonic_on_points(points: np.ndarray,
                        params: ReactionDiffusionParams) -> np.ndarray:
    p = points / np.linalg.norm(points, axis=-1, keepdims=True)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.arctan2(p[..., 1], p[..., 0])
    return real_harmonic(params.harmonic_n, params.harmonic_m, theta, phi)


def rd_mode_amplitudes(t: float, params: ReactionDiffusionParams,
                       oscillatory: str = "continue") -> np.ndarray:
    """(u, v) amplitudes at time t from the 2x2 mode system.

    exp(M t) = e^(gamma t) [cosh(delta t) I + sinh(delta t)/delta (M - gamma I)]
    with gamma = tr/2 and delta^2 = tr^2/4 - det.  A negative
    discriminant switches cosh/sinh to cos/sin; pass
    oscillatory="raise" to get ComplexDeltaN instead.
    """
    mat = params.mode_matrix()
    gamma = 0.5 * (mat[0, 0] + mat[1, 1])
    disc = gamma * gamma - float(np.linalg.det(mat))
    if disc >= 0:
        delta = math.sqrt(disc)
        ch = math.cosh(delta * t)
        sh = math.sinh(delta * t) / delta if delta > 0 else t
    else:
        if oscillatory == "raise":
            raise ComplexDeltaN(f"discriminant {disc:.6g} < 0")
        omega = math.sqrt(-disc)
        ch = math.cos(omega * t)
        sh = math.sin(omega * t) / omega
    prop = math.exp(gamma * t) * (ch * np.eye(2) + sh * (mat - gamma * np.eye(2)))
    return prop @ np.array([params.u_amp, params.v_amp])


def rd_exact_solution(theta, phi, t: float,
                      params: ReactionDiffusionParams,
                      oscillatory: str = "continue"):
    """Exact (u, v) fields at time t for the single-harmonic data."""
    amps = rd_mode_amplitudes(t, params, oscillatory)
    y = real_harmonic(params.harmonic_n, params.harmonic_m,
                      np.asarray(theta), np.asarray(phi))
    return amps[0] * y, amps[1] * y


class LdgLaplacian:
    """Precomputed mixed-form surface Laplacian on one geometry."""

    def __init__(self, geometry: ElementGeometry, frames: MovingFrames,
                 alpha: float, beta: float):
        self.geometry = geometry
        self.frames = frames
        self.alpha = alpha
        self.beta = beta
        self.inv_mass = geometry.inv_mass
        e_idx = np.arange(geometry.neighbor_elem.shape[0])[:, None]
        self.sgn = np.where(e_idx < geometry.neighbor_elem, 1.0, -1.0)[:, :, None]
        n_self = geometry.edge_normal
        n_nbr = exchange_traces(n_self, geometry)
        self.n_minus = np.where(self.sgn[..., None] > 0, n_self, n_nbr)
        # discrete weak divergence of each frame vector, one-sided flux,
        # so that constant fields produce exactly zero gradient
        self.div_e = []
        self.ein = []
        for ei in (frames.e1, frames.e2):
            ein = np.einsum("elmc,elmc->elm", element_traces(ei), n_self)
            div = (lift_edge_flux(ein, geometry)
                   - weak_gradient_volume(ei, geometry)) * self.inv_mass
            self.div_e.append(div)
            self.ein.append(ein)

    def _jump(self, tr):
        sgn = self.sgn if tr.ndim == 3 else self.sgn[..., None]
        return sgn * (tr - exchange_traces(tr, self.geometry))

    def gradient(self, u: np.ndarray):
        """LDG auxiliary gradient components (q1, q2)."""
        u_tr = element_traces(u)
        u_tilde = (0.5 * (u_tr + exchange_traces(u_tr, self.geometry))
                   + self.beta * self._jump(u_tr))
        g = self.geometry
        out = []
        for ei, ein, div in zip((self.frames.e1, self.frames.e2),
                                self.ein, self.div_e):
            res = (lift_edge_flux(u_tilde * ein, g)
                   - weak_gradient_volume(u[..., None] * ei, g))
            out.append(res * self.inv_mass - u * div)
        return out

    def __call__(self, u: np.ndarray) -> np.ndarray:
        q1, q2 = self.gradient(u)
        g = self.geometry
        q_cart = q1[..., None] * self.frames.e1 + q2[..., None] * self.frames.e2
        q_tr = element_traces(q_cart)
        u_tr = element_traces(u)
        q_tilde = (0.5 * (q_tr + exchange_traces(q_tr, g))
                   - self.alpha * self.n_minus * self._jump(u_tr)[..., None]
                   - self.beta * self._jump(q_tr))
        flux = np.einsum("elmc,elmc->elm", q_tilde, g.edge_normal)
        return (lift_edge_flux(flux, g)
                - weak_gradient_volume(q_cart, g)) * self.inv_mass


def reaction_diffusion_solve(geometry: ElementGeometry, frames: MovingFrames,
                             params: ReactionDiffusionParams,
                             observe_every: int = 100,
                             metadata: dict | None = None):
    """March the coupled system; returns (DiagnosticsSeries, (u, v))."""
    y_field = _harmonic_on_points(geometry.x, params)
    state0 = (params.u_amp * y_field, params.v_amp * y_field)
    lap = LdgLaplacian(geometry, frames, params.ldg_alpha, params.ldg_beta)

    def rhs(t, state):
        u, v = state
        return (params.mu * lap(u) + params.a * u + params.b * v,
                params.nu * lap(v) + params.c * u + params.d * v)

    n_steps = round(params.t_final / params.dt)
    mass0 = integrate(state0[0], geometry)
    series = DiagnosticsSeries(
        columns=("time[nondim]", "l2[rel]", "linf[rel]", "mass_drift[abs]"),
        metadata=dict(metadata or {}, case="reaction-diffusion",
                      dt=params.dt, t_final=params.t_final, n_steps=n_steps))

    def observer(step, t, state):
        amps = rd_mode_amplitudes(t, params)
        eu = state[0] - amps[0] * y_field
        ev = state[1] - amps[1] * y_field
        ex_norm = math.hypot(amps[0], amps[1]) * l2_norm(y_field, geometry)
        ex_peak = math.hypot(amps[0], amps[1]) * linf_norm(y_field)
        err_l2 = math.hypot(l2_norm(eu, geometry), l2_norm(ev, geometry))
        err_pk = max(linf_norm(eu), linf_norm(ev))
        series.append(t, err_l2 / ex_norm, err_pk / ex_peak,
                      abs(integrate(state[0], geometry) - mass0))

    state = advance(state0, rhs, params.dt, n_steps, observer=observer,
                    observe_every=observe_every)
    return series, state
