"""Spectral-element machinery on quadrilateral surface elements.

Gauss-Lobatto-Legendre (GLL) collocation on the reference square
[-1,1]^2.  Mass matrices are diagonal (nodes = quadrature points) and
every element-local operation is batched over the leading element axis.

Array layout: nodal fields are ``(E, m, m)`` with ``u[e, i, j]`` where
``i`` indexes the first reference coordinate and ``j`` the second,
``m = p + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateElement, NonConformingEdge, OrderOutOfRange

MAX_ORDER = 16

# Local edge numbering on the reference square.  Each edge carries a
# parameter running in the direction of increasing node index:
#   edge 0: xi2 = -1, param = xi1     edge 1: xi1 = +1, param = xi2
#   edge 2: xi2 = +1, param = xi1     edge 3: xi1 = -1, param = xi2
N_EDGES = 4


def gll_nodes_weights(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the (p+1)-point Gauss-Lobatto-Legendre rule.

    Newton iteration on the Legendre recurrence starting from
    Chebyshev-Lobatto points.  Exact for polynomials of degree 2p - 1.
    """
    n = p + 1
    if n == 2:
        return np.array([-1.0, 1.0]), np.array([1.0, 1.0])
    x = -np.cos(np.pi * np.arange(n) / p)
    leg = np.zeros((n, n))
    x_old = np.full(n, 2.0)
    while np.max(np.abs(x - x_old)) > 1e-15:
        x_old = x.copy()
        leg[:, 0] = 1.0
        leg[:, 1] = x
        for k in range(2, n):
            leg[:, k] = ((2 * k - 1) * x * leg[:, k - 1] - (k - 1) * leg[:, k - 2]) / k
        x = x_old - (x * leg[:, p] - leg[:, p - 1]) / (n * leg[:, p])
    w = 2.0 / (p * n * leg[:, p] ** 2)
    # pin the endpoints and symmetrize against roundoff drift
    x[0], x[-1] = -1.0, 1.0
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Differentiation matrix D[i, j] = l_j'(x_i) for the Lagrange basis."""
    bw = barycentric_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (bw[None, :] / bw[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


def lagrange_matrix(nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Evaluation matrix L[a, j] = l_j(targets[a]) in barycentric form."""
    bw = barycentric_weights(nodes)
    diff = np.asarray(targets)[:, None] - nodes[None, :]
    hit = np.abs(diff) < 1e-14
    terms = bw[None, :] / np.where(hit, 1.0, diff)
    out = terms / terms.sum(axis=1, keepdims=True)
    on_node = hit.any(axis=1)
    out[on_node] = 0.0
    out[hit] = 1.0
    return out


@dataclass(frozen=True)
class ReferenceElement:
    """Immutable 1D GLL rule plus its tensor-product bookkeeping."""

    p: int
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray
    weights_2d: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.p + 1


def make_reference_element(p: int) -> ReferenceElement:
    """Build the collocation reference element of order p (1 <= p <= 16)."""
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise OrderOutOfRange(f"polynomial order must be an integer, got {p!r}")
    if p < 1 or p > MAX_ORDER:
        raise OrderOutOfRange(f"polynomial order {p} outside [1, {MAX_ORDER}]")
    nodes, weights = gll_nodes_weights(int(p))
    ref = ReferenceElement(
        p=int(p),
        nodes=nodes,
        weights=weights,
        diff=diff_matrix(nodes),
        weights_2d=np.outer(weights, weights),
    )
    ref.nodes.flags.writeable = False
    ref.weights.flags.writeable = False
    ref.diff.flags.writeable = False
    ref.weights_2d.flags.writeable = False
    return ref


def d_xi1(u: np.ndarray, ref: ReferenceElement) -> np.ndarray:
    """Derivative along the first reference coordinate, batched."""
    return np.matmul(ref.diff, u)


def d_xi2(u: np.ndarray, ref: ReferenceElement) -> np.ndarray:
    """Derivative along the second reference coordinate, batched."""
    return np.matmul(u, ref.diff.T)


@dataclass
class ElementGeometry:
    """Metric terms of a batch of mapped quadrilateral surface elements.

    Immutable after construction.  ``x`` holds the mapped collocation
    points, ``a1``/``a2`` the contravariant (dual) tangent basis so that
    the surface gradient of a nodal field is ``d1(u) a1 + d2(u) a2``.
    """

    ref: ReferenceElement
    x: np.ndarray          # (E, m, m, 3) mapped points
    t1: np.ndarray         # (E, m, m, 3) covariant tangents
    t2: np.ndarray
    jac: np.ndarray        # (E, m, m) surface Jacobian |t1 x t2|
    normal: np.ndarray     # (E, m, m, 3) unit element normal
    a1: np.ndarray         # (E, m, m, 3) dual basis, a_alpha . t_beta = delta
    a2: np.ndarray
    jw: np.ndarray         # (E, m, m) J * tensor weights (diagonal mass)
    edge_normal: np.ndarray   # (E, 4, m, 3) outward in-surface edge normals
    edge_sj: np.ndarray       # (E, 4, m) edge arc Jacobians
    neighbor_elem: np.ndarray  # (E, 4) partner element, -1 on boundary
    neighbor_edge: np.ndarray  # (E, 4) partner local edge
    edge_flip: np.ndarray      # (E, 4) partner trace must be reversed
    area: float = field(init=False)

    def __post_init__(self):
        self.area = float(np.sum(self.jw))
        for arr in (self.x, self.t1, self.t2, self.jac, self.normal,
                    self.a1, self.a2, self.jw, self.edge_normal,
                    self.edge_sj, self.neighbor_elem, self.neighbor_edge,
                    self.edge_flip):
            arr.flags.writeable = False

    @property
    def n_elements(self) -> int:
        return self.x.shape[0]

    @property
    def inv_mass(self) -> np.ndarray:
        return 1.0 / self.jw


def _validate_connectivity(neighbor_elem, neighbor_edge, m):
    """Every interior edge must be paired consistently and conformingly."""
    n_elem = neighbor_elem.shape[0]
    for e in range(n_elem):
        for loc in range(N_EDGES):
            ne = neighbor_elem[e, loc]
            if ne < 0:
                continue
            if ne >= n_elem:
                raise NonConformingEdge(
                    f"edge ({e},{loc}) points at missing element {ne}")
            nl = neighbor_edge[e, loc]
            if neighbor_elem[ne, nl] != e or neighbor_edge[ne, nl] != loc:
                raise NonConformingEdge(
                    f"edge ({e},{loc}) and ({ne},{nl}) do not pair up")


def compute_geometry(mesh, ref: ReferenceElement) -> ElementGeometry:
    """Evaluate metric terms of ``mesh`` on the collocation grid of ``ref``.

    ``mesh`` provides ``control_nodes`` of shape ``(E, (pg+1)**2, 3)``
    (row-major over the geometry grid, second coordinate slowest),
    ``p_geom`` and the edge pairing tables.  The map is differentiated
    exactly on its own grid, then resampled, so tangents are those of
    the true polynomial map even when ``p != p_geom``.
    """
    mg = mesh.p_geom + 1
    m = ref.n_nodes
    ctrl = np.asarray(mesh.control_nodes, dtype=float)
    n_elem = ctrl.shape[0]
    if ctrl.shape != (n_elem, mg * mg, 3):
        raise DegenerateElement(
            f"control node block {ctrl.shape} does not match order {mesh.p_geom}")
    # (E, i, j, 3) with i along xi1
    xg = ctrl.reshape(n_elem, mg, mg, 3).transpose(0, 2, 1, 3)

    geom_nodes, _ = gll_nodes_weights(mesh.p_geom)
    dg = diff_matrix(geom_nodes)
    t1g = np.einsum("ia,eajc->eijc", dg, xg)
    t2g = np.einsum("ja,eiac->eijc", dg, xg)

    resamp = lagrange_matrix(geom_nodes, ref.nodes)

    def to_solution_grid(f):
        return np.einsum("ia,jb,eabc->eijc", resamp, resamp, f)

    x = to_solution_grid(xg)
    t1 = to_solution_grid(t1g)
    t2 = to_solution_grid(t2g)

    cross = np.cross(t1, t2)
    jac = np.linalg.norm(cross, axis=-1)
    if np.any(jac <= 1e-14):
        bad = int(np.argwhere(jac <= 1e-14)[0][0])
        raise DegenerateElement(f"vanishing surface Jacobian in element {bad}")
    normal = cross / jac[..., None]
    # folded maps have a normal that flips sign inside the element
    mean_n = normal.mean(axis=(1, 2))
    mean_n /= np.linalg.norm(mean_n, axis=-1, keepdims=True)
    if np.any(np.einsum("eijc,ec->eij", normal, mean_n) <= 0.0):
        raise DegenerateElement("element map folds back on itself")

    a1 = np.cross(t2, normal) / jac[..., None]
    a2 = np.cross(normal, t1) / jac[..., None]
    jw = jac * ref.weights_2d

    # Edge traces of the metric.  Edge tangent is t1 on edges 0/2 and
    # t2 on edges 1/3; the outward in-surface normal is the unit dual
    # vector pointing off the element.
    def tr(f, loc):
        if loc == 0:
            return f[:, :, 0]
        if loc == 1:
            return f[:, m - 1, :]
        if loc == 2:
            return f[:, :, m - 1]
        return f[:, 0, :]

    edge_sj = np.empty((n_elem, N_EDGES, m))
    edge_normal = np.empty((n_elem, N_EDGES, m, 3))
    edge_tangents = {0: t1, 2: t1, 1: t2, 3: t2}
    edge_duals = {0: (a2, -1.0), 2: (a2, 1.0), 1: (a1, 1.0), 3: (a1, -1.0)}
    for loc in range(N_EDGES):
        edge_sj[:, loc] = np.linalg.norm(tr(edge_tangents[loc], loc), axis=-1)
        dual, sign = edge_duals[loc]
        nvec = sign * tr(dual, loc)
        edge_normal[:, loc] = nvec / np.linalg.norm(nvec, axis=-1, keepdims=True)

    neighbor_elem = np.asarray(mesh.neighbor_elem, dtype=int)
    neighbor_edge = np.asarray(mesh.neighbor_edge, dtype=int)
    edge_flip = np.asarray(mesh.edge_flip, dtype=bool)
    _validate_connectivity(neighbor_elem, neighbor_edge, m)

    return ElementGeometry(
        ref=ref, x=x, t1=t1, t2=t2, jac=jac, normal=normal, a1=a1, a2=a2,
        jw=jw, edge_normal=edge_normal, edge_sj=edge_sj,
        neighbor_elem=neighbor_elem.copy(), neighbor_edge=neighbor_edge.copy(),
        edge_flip=edge_flip.copy(),
    )


def element_traces(u: np.ndarray) -> np.ndarray:
    """Collect the four edge traces of a nodal field, shape (E, 4, m)."""
    m = u.shape[1]
    comps = u.shape[3:]  # allow trailing component axes
    out = np.empty(u.shape[:1] + (N_EDGES, m) + comps, dtype=u.dtype)
    out[:, 0] = u[:, :, 0]
    out[:, 1] = u[:, m - 1, :]
    out[:, 2] = u[:, :, m - 1]
    out[:, 3] = u[:, 0, :]
    return out


def exchange_traces(traces: np.ndarray, geom: ElementGeometry) -> np.ndarray:
    """Neighbor traces aligned with each element's own edge parameter.

    Boundary edges (neighbor -1) copy the element's own trace, so flux
    formulas see a zero jump there.
    """
    ne = geom.neighbor_elem
    nl = geom.neighbor_edge
    interior = ne >= 0
    gathered = traces[np.where(interior, ne, 0), np.where(interior, nl, 0)]
    gathered = np.where(
        geom.edge_flip[(...,) + (None,) * (traces.ndim - 2)],
        gathered[:, :, ::-1], gathered)
    return np.where(interior[(...,) + (None,) * (traces.ndim - 2)],
                    gathered, traces)


def edge_trace_exchange(u: np.ndarray, geom: ElementGeometry):
    """Interior and exterior traces of ``u`` on every element edge.

    Returns ``(u_self, u_neigh)``, both ``(E, 4, m)``, with the
    neighbor trace reordered to follow the caller's edge parameter.
    """
    if u.shape[1] != geom.ref.n_nodes or u.shape[2] != geom.ref.n_nodes:
        raise NonConformingEdge(
            f"field grid {u.shape[1:3]} does not match order {geom.ref.p} traces")
    mine = element_traces(u)
    return mine, exchange_traces(mine, geom)


def integrate(u: np.ndarray, geom: ElementGeometry) -> float:
    """Surface integral of a nodal scalar field."""
    return float(np.sum(u * geom.jw))


def grad_physical(u: np.ndarray, geom: ElementGeometry) -> np.ndarray:
    """Cartesian surface gradient of a nodal scalar, shape (E, m, m, 3)."""
    du1 = d_xi1(u, geom.ref)
    du2 = d_xi2(u, geom.ref)
    return du1[..., None] * geom.a1 + du2[..., None] * geom.a2


def weak_gradient_volume(w: np.ndarray, geom: ElementGeometry) -> np.ndarray:
    """Volume term sum_q (grad phi . w) J w_q as a nodal array.

    ``w`` is a Cartesian vector field (E, m, m, 3).  Not mass-inverted.
    """
    f1 = np.einsum("eijc,eijc->eij", geom.a1, w) * geom.jw
    f2 = np.einsum("eijc,eijc->eij", geom.a2, w) * geom.jw
    d = geom.ref.diff
    return np.matmul(d.T, f1) + np.matmul(f2, d)


def weak_gradient_volume_scalar_pair(f1: np.ndarray, f2: np.ndarray,
                                     geom: ElementGeometry) -> np.ndarray:
    """Same as weak_gradient_volume with the dual projections precomputed."""
    d = geom.ref.diff
    return np.matmul(d.T, f1 * geom.jw) + np.matmul(f2 * geom.jw, d)


@dataclass
class DealiasedVolume:
    """Weak volume terms evaluated on a finer quadrature grid.

    Collocation at p+1 points aliases products of nodal fields; for
    marginally resolved nonlinear runs the aliasing feeds an
    instability.  This helper interpolates fields to an n_quad-point
    GLL grid, forms products there, and integrates against the original
    basis.  Testing against phi = 1 still telescopes to zero, so
    conservation is untouched.
    """

    interp: np.ndarray    # (q, m) basis values on the fine grid
    interp_d: np.ndarray  # (q, m) basis derivatives on the fine grid
    a1w: np.ndarray       # (E, q, q, 3) first dual vector times J w
    a2w: np.ndarray

    def to_quad_grid(self, f: np.ndarray) -> np.ndarray:
        """Interpolate a nodal scalar or Cartesian field to the fine grid."""
        if f.ndim == 3:
            return np.matmul(np.matmul(self.interp, f), self.interp.T)
        moved = np.moveaxis(f, -1, 1)  # (E, c, m, m), batched matmul layout
        fine = np.matmul(np.matmul(self.interp, moved), self.interp.T)
        return np.moveaxis(fine, 1, -1)

    def weak_gradient_volume(self, w: np.ndarray) -> np.ndarray:
        """sum_q (grad phi . w) J w_q for ``w`` on the fine grid."""
        g1 = np.einsum("eqrc,eqrc->eqr", self.a1w, w)
        g2 = np.einsum("eqrc,eqrc->eqr", self.a2w, w)
        return (np.matmul(np.matmul(self.interp_d.T, g1), self.interp)
                + np.matmul(np.matmul(self.interp.T, g2), self.interp_d))


def build_dealiased_volume(geom: ElementGeometry,
                           n_quad: int | None = None) -> DealiasedVolume:
    """Fine-grid quadrature data for ``geom``.

    Default n_quad follows the 3/2 rule for quadratic products.  The
    tangents are exact polynomials of the element map, so resampling
    them and rebuilding the duals loses nothing.
    """
    p = geom.ref.p
    if n_quad is None:
        n_quad = -(-3 * (p + 1) // 2)
    qn, qw = gll_nodes_weights(n_quad - 1)
    interp = lagrange_matrix(geom.ref.nodes, qn)
    interp_d = interp @ geom.ref.diff

    def resample(f):
        return np.einsum("qa,rb,eabc->eqrc", interp, interp, f)

    t1 = resample(geom.t1)
    t2 = resample(geom.t2)
    cross = np.cross(t1, t2)
    jac = np.linalg.norm(cross, axis=-1)
    normal = cross / jac[..., None]
    jac_w = jac * np.outer(qw, qw)
    a1w = np.cross(t2, normal) / jac[..., None] * jac_w[..., None]
    a2w = np.cross(normal, t1) / jac[..., None] * jac_w[..., None]
    return DealiasedVolume(interp=interp, interp_d=interp_d, a1w=a1w, a2w=a2w)


def lift_edge_flux(flux: np.ndarray, geom: ElementGeometry) -> np.ndarray:
    """Boundary term sum_edges int flux * phi ds as a nodal array.

    ``flux`` is (E, 4, m) sampled on the edge parameter.  Corner nodes
    accumulate from both adjacent edges.  Not mass-inverted.
    """
    m = geom.ref.n_nodes
    w1 = geom.ref.weights
    weighted = flux * geom.edge_sj * w1
    out = np.zeros((flux.shape[0], m, m))
    out[:, :, 0] += weighted[:, 0]
    out[:, m - 1, :] += weighted[:, 1]
    out[:, :, m - 1] += weighted[:, 2]
    out[:, 0, :] += weighted[:, 3]
    return out


def l2_norm(u: np.ndarray, geom: ElementGeometry,
            mask: np.ndarray | None = None) -> float:
    """Quadrature L2 norm, optionally restricted to a boolean element mask."""
    w = geom.jw if mask is None else geom.jw * mask[:, None, None]
    return float(np.sqrt(np.sum(u * u * w)))


def linf_norm(u: np.ndarray, mask: np.ndarray | None = None) -> float:
    if mask is not None:
        u = u[mask]
    return float(np.max(np.abs(u))) if u.size else 0.0
