"""Cubed-sphere quadrilateral meshes and high-order node placement.

Two node strategies are provided.  ``NaiveProjection`` freezes the
geometry at a low fixed order (vertices-plus-projected-nodes of that
order) and re-samples the frozen map when asked for more nodes, which
is how meshes built from low-order CAD/mesh files behave: the distance
of the element maps from the sphere plateaus no matter how large
``p_geom`` gets.  ``GeodesicOptimized`` places edge nodes on great
circles and relaxes interior nodes before projecting everything onto
the sphere, so the distance decays spectrally with ``p_geom``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    MeshFormatError,
    NonConformingEdge,
    OrderOutOfRange,
    SpringNonConvergence,
)
from .sem import MAX_ORDER, gll_nodes_weights, lagrange_matrix

# Cube faces as (outward axis, u tangent, v tangent) with tu x tv
# pointing outward, so face grids and elements are counterclockwise
# seen from outside the sphere.
_FACE_AXES = np.array([
    [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[-1, 0, 0], [0, 0, 1], [0, 1, 0]],
    [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
    [[0, -1, 0], [1, 0, 0], [0, 0, 1]],
    [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
    [[0, 0, -1], [0, 1, 0], [1, 0, 0]],
], dtype=float)

# Local edge endpoints in corner indices, param direction start -> end:
#   edge 0: xi2=-1 along xi1, edge 1: xi1=+1 along xi2,
#   edge 2: xi2=+1 along xi1, edge 3: xi1=-1 along xi2.
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))


@dataclass(frozen=True)
class NaiveProjection:
    """Freeze geometric fidelity at order ``p_geom_fixed`` (default 2)."""

    p_geom_fixed: int = 2

    def __post_init__(self):
        if self.p_geom_fixed < 1:
            raise OrderOutOfRange(
                f"p_geom_fixed must be >= 1, got {self.p_geom_fixed}")

    name = "naive"


@dataclass(frozen=True)
class GeodesicOptimized:
    """Great-circle edge nodes plus spring-relaxed, projected interiors."""

    spring_tol: float = 1e-12
    spring_max_iter: int = 10000
    spring_step: float = 0.1

    name = "optimized"


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def slerp(a: np.ndarray, b: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Great-circle interpolation between unit vectors a, b at fractions s.

    ``a``/``b`` are (E, 3), ``s`` is (m,); returns (E, m, 3).  The
    formula is symmetric in (a, b, s) <-> (b, a, 1-s), which keeps
    shared mesh edges watertight regardless of traversal direction.
    """
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    ang = np.arccos(dot)[:, None, None]
    s = np.asarray(s)[None, :, None]
    return (np.sin((1.0 - s) * ang) * a[:, None, :]
            + np.sin(s * ang) * b[:, None, :]) / np.sin(ang)


def _build_edge_tables(elements: np.ndarray):
    """Pair up element edges of a closed quad mesh.

    Returns (edges, neighbor_elem, neighbor_edge, edge_flip).  ``edges``
    lists every undirected edge once as (elem_a, loc_a, elem_b, loc_b).
    ``edge_flip`` marks pairs whose edge parameters run in opposite
    physical directions.
    """
    n_elem = elements.shape[0]
    neighbor_elem = np.full((n_elem, 4), -1, dtype=int)
    neighbor_edge = np.full((n_elem, 4), -1, dtype=int)
    edge_flip = np.zeros((n_elem, 4), dtype=bool)
    open_edges: dict = {}
    edges = []
    for e in range(n_elem):
        quad = elements[e]
        for loc, (ca, cb) in enumerate(_EDGE_CORNERS):
            start, end = int(quad[ca]), int(quad[cb])
            key = (min(start, end), max(start, end))
            if key in open_edges:
                oe, ol, ostart = open_edges.pop(key)
                flip = start != ostart
                neighbor_elem[e, loc], neighbor_edge[e, loc] = oe, ol
                neighbor_elem[oe, ol], neighbor_edge[oe, ol] = e, loc
                edge_flip[e, loc] = edge_flip[oe, ol] = flip
                edges.append((oe, ol, e, loc))
            else:
                open_edges[key] = (e, loc, start)
    if open_edges:
        raise NonConformingEdge(
            f"{len(open_edges)} element edges have no partner; mesh is not closed")
    return edges, neighbor_elem, neighbor_edge, edge_flip


@dataclass
class LinearSphereMesh:
    """Straight-edged cubed-sphere quad mesh with all vertices on the sphere."""

    n_per_face: int
    vertices: np.ndarray     # (V, 3)
    elements: np.ndarray     # (E, 4) corner ids, counterclockwise from outside
    face_id: np.ndarray      # (E,) owning cube face
    edges: list              # unique (elem_a, loc_a, elem_b, loc_b)
    neighbor_elem: np.ndarray
    neighbor_edge: np.ndarray
    edge_flip: np.ndarray
    h: float                 # max great-circle edge arc

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]


def generate_cubed_sphere(n_per_face: int) -> LinearSphereMesh:
    """Equiangular cubed sphere with 6 n^2 quads, vertices projected radially."""
    n = int(n_per_face)
    if n < 1:
        raise ValueError(f"n_per_face must be >= 1, got {n_per_face}")
    angles = -np.pi / 4 + np.arange(n + 1) * (np.pi / (2 * n))
    grid1d = np.tan(angles)
    grid1d[0], grid1d[-1] = -1.0, 1.0
    if n % 2 == 0:
        grid1d[n // 2] = 0.0

    vert_index: dict = {}
    vertices: list = []

    def vertex_id(point: np.ndarray) -> int:
        key = np.round(point, 10).tobytes()
        if key not in vert_index:
            vert_index[key] = len(vertices)
            vertices.append(point)
        return vert_index[key]

    face_grid = np.empty((6, n + 1, n + 1), dtype=int)
    for f in range(6):
        axis, tu, tv = _FACE_AXES[f]
        for i in range(n + 1):
            for j in range(n + 1):
                p = _unit(axis + grid1d[i] * tu + grid1d[j] * tv)
                face_grid[f, i, j] = vertex_id(p)

    elements = []
    face_id = []
    for f in range(6):
        for j in range(n):
            for i in range(n):
                elements.append((face_grid[f, i, j], face_grid[f, i + 1, j],
                                 face_grid[f, i + 1, j + 1], face_grid[f, i, j + 1]))
                face_id.append(f)
    vertices = np.array(vertices)
    elements = np.array(elements, dtype=int)
    edges, ne, nl, fl = _build_edge_tables(elements)

    arcs = [np.arccos(np.clip(np.dot(vertices[elements[ea][_EDGE_CORNERS[la][0]]],
                                     vertices[elements[ea][_EDGE_CORNERS[la][1]]]),
                              -1.0, 1.0))
            for ea, la, _, _ in edges]
    mesh = LinearSphereMesh(
        n_per_face=n, vertices=vertices, elements=elements,
        face_id=np.array(face_id, dtype=int), edges=edges,
        neighbor_elem=ne, neighbor_edge=nl, edge_flip=fl,
        h=float(np.max(arcs)))
    _check_counts_and_orientation(mesh)
    return mesh


def _check_counts_and_orientation(mesh: LinearSphereMesh):
    n = mesh.n_per_face
    n_v, n_e, n_f = len(mesh.vertices), len(mesh.edges), mesh.n_elements
    if n_f != 6 * n * n or n_v != 6 * n * n + 2 or n_e != 12 * n * n:
        raise MeshFormatError(
            f"counts (V={n_v}, E={n_e}, F={n_f}) wrong for n_per_face={n}")
    if n_v - n_e + n_f != 2:
        raise MeshFormatError("Euler characteristic is not 2")
    quads = mesh.vertices[mesh.elements]  # (E, 4, 3)
    normals = np.zeros((n_f, 3))
    for k in range(4):
        normals += np.cross(quads[:, k], quads[:, (k + 1) % 4])
    centroid = quads.mean(axis=1)
    if np.any(np.sum(normals * centroid, axis=-1) <= 0.0):
        raise MeshFormatError("element with inward orientation")


@dataclass(frozen=True)
class ElementMapping:
    """One element's geometric map: GLL control nodes over [-1,1]^2."""

    p_geom: int
    control_nodes: np.ndarray  # ((p_geom+1)^2, 3) row-major, xi2 slowest


@dataclass
class HighOrderMesh:
    """Linear mesh plus per-element high-order control nodes."""

    linear: LinearSphereMesh
    strategy: NaiveProjection | GeodesicOptimized
    p_geom: int
    control_nodes: np.ndarray  # (E, (p_geom+1)^2, 3)

    @property
    def mappings(self) -> list:
        return [ElementMapping(self.p_geom, self.control_nodes[e])
                for e in range(self.n_elements)]

    @property
    def n_elements(self) -> int:
        return self.linear.n_elements

    @property
    def n_per_face(self) -> int:
        return self.linear.n_per_face

    @property
    def h(self) -> float:
        return self.linear.h

    @property
    def neighbor_elem(self) -> np.ndarray:
        return self.linear.neighbor_elem

    @property
    def neighbor_edge(self) -> np.ndarray:
        return self.linear.neighbor_edge

    @property
    def edge_flip(self) -> np.ndarray:
        return self.linear.edge_flip

    def node_grid(self) -> np.ndarray:
        """Control nodes as (E, i, j, 3) with i along the first coordinate."""
        mg = self.p_geom + 1
        return self.control_nodes.reshape(self.n_elements, mg, mg, 3).transpose(0, 2, 1, 3)


def _grid_to_flat(grid: np.ndarray) -> np.ndarray:
    e, mg = grid.shape[0], grid.shape[1]
    return grid.transpose(0, 2, 1, 3).reshape(e, mg * mg, 3)


def _bilinear_projected(corners: np.ndarray, nodes1d: np.ndarray) -> np.ndarray:
    """Bilinear map of each quad sampled on a GLL grid, projected radially."""
    xi = nodes1d[:, None]
    eta = nodes1d[None, :]
    shape = np.stack([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                      (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]) / 4.0
    return _unit(np.einsum("kij,ekc->eijc", shape, corners))


def _naive_grid(linear: LinearSphereMesh, p_geom: int,
                strategy: NaiveProjection) -> np.ndarray:
    corners = linear.vertices[linear.elements]
    frozen_nodes, _ = gll_nodes_weights(strategy.p_geom_fixed)
    frozen = _bilinear_projected(corners, frozen_nodes)
    target_nodes, _ = gll_nodes_weights(p_geom)
    resamp = lagrange_matrix(frozen_nodes, target_nodes)
    return np.einsum("ia,jb,eabc->eijc", resamp, resamp, frozen)


def _to_plane(points: np.ndarray, axis, tu, tv) -> np.ndarray:
    """Gnomonic chart of the owning cube face; great circles map to lines."""
    q = points / np.sum(points * axis, axis=-1, keepdims=True)
    return np.stack([np.sum(q * tu, axis=-1), np.sum(q * tv, axis=-1)], axis=-1)


def _from_plane(plane: np.ndarray, axis, tu, tv) -> np.ndarray:
    return _unit(axis + plane[..., :1] * tu + plane[..., 1:] * tv)


def _relax_interior(plane: np.ndarray, rest_h: np.ndarray, rest_v: np.ndarray,
                    strategy: GeodesicOptimized) -> np.ndarray:
    """Minimize spring energy of the grid in the gnomonic plane.

    Unit-stiffness springs along the 4-neighbor grid with prescribed
    rest lengths; boundary nodes never move.  Plain gradient descent;
    the energy has a zero-energy minimum (the rest lengths come from a
    realizable configuration) so a fixed step converges geometrically.
    """
    mg = plane.shape[1]
    if mg <= 2:
        return plane
    hold = np.zeros((mg, mg, 1), dtype=bool)
    hold[1:-1, 1:-1] = True

    p = plane.copy()
    for _ in range(strategy.spring_max_iter):
        dh = p[:, 1:] - p[:, :-1]
        lh = np.linalg.norm(dh, axis=-1)
        gh = (2.0 * (lh - rest_h) / lh)[..., None] * dh
        dv = p[:, :, 1:] - p[:, :, :-1]
        lv = np.linalg.norm(dv, axis=-1)
        gv = (2.0 * (lv - rest_v) / lv)[..., None] * dv
        grad = np.zeros_like(p)
        grad[:, :-1] -= gh
        grad[:, 1:] += gh
        grad[:, :, :-1] -= gv
        grad[:, :, 1:] += gv
        moved = strategy.spring_step * grad * hold
        p -= moved
        if np.max(np.abs(moved)) <= strategy.spring_tol:
            return p
    raise SpringNonConvergence(
        f"spring relaxation above tol {strategy.spring_tol} after "
        f"{strategy.spring_max_iter} iterations")


def _geodesic_blend(grid: np.ndarray, frac: np.ndarray) -> np.ndarray:
    """Tensor blend of the edge curves along great circles.

    Interior node (i, j) is the great-circle point at arc fraction
    frac[j] between bottom node i and top node i, averaged with the
    transposed construction and renormalized.  Interpolates all four
    edge curves exactly and is a smooth map of the reference square, so
    the element map it induces hugs the sphere at spectral accuracy.
    """
    n_elem, mg = grid.shape[0], grid.shape[1]
    bottom = grid[:, :, 0].reshape(-1, 3)
    top = grid[:, :, mg - 1].reshape(-1, 3)
    left = grid[:, 0, :].reshape(-1, 3)
    right = grid[:, mg - 1, :].reshape(-1, 3)
    rows = slerp(bottom, top, frac).reshape(n_elem, mg, mg, 3)
    cols = slerp(left, right, frac).reshape(n_elem, mg, mg, 3).transpose(0, 2, 1, 3)
    return _unit(0.5 * (rows + cols))


def _optimized_grid(linear: LinearSphereMesh, p_geom: int,
                    strategy: GeodesicOptimized) -> np.ndarray:
    corners = linear.vertices[linear.elements]
    c0, c1, c2, c3 = (corners[:, k] for k in range(4))
    nodes1d, _ = gll_nodes_weights(p_geom)
    frac = (nodes1d + 1.0) / 2.0
    mg = p_geom + 1
    n_elem = linear.n_elements

    grid = np.empty((n_elem, mg, mg, 3))
    grid[:, :, 0] = slerp(c0, c1, frac)
    grid[:, :, mg - 1] = slerp(c3, c2, frac)
    grid[:, 0, :] = slerp(c0, c3, frac)
    grid[:, mg - 1, :] = slerp(c1, c2, frac)
    if mg <= 2:
        return grid

    axis = _FACE_AXES[linear.face_id, 0][:, None, None, :]
    tu = _FACE_AXES[linear.face_id, 1][:, None, None, :]
    tv = _FACE_AXES[linear.face_id, 2][:, None, None, :]

    plane = np.empty((n_elem, mg, mg, 2))
    for sl in (np.s_[:, :, 0], np.s_[:, :, mg - 1], np.s_[:, 0, :], np.s_[:, mg - 1, :]):
        plane[sl] = _to_plane(grid[sl], axis[:, 0], tu[:, 0], tv[:, 0])

    # Rest lengths: GLL spacing transported along great circles, i.e.
    # the chart distances between adjacent nodes of the geodesic tensor
    # blend.  That blend is then the zero-energy spring configuration.
    target = _to_plane(_geodesic_blend(grid, frac), axis, tu, tv)
    rest_h = np.linalg.norm(target[:, 1:] - target[:, :-1], axis=-1)
    rest_v = np.linalg.norm(target[:, :, 1:] - target[:, :, :-1], axis=-1)

    # transfinite (Coons) blend of the four boundary curves as the start
    s = frac[None, :, None, None]
    t = frac[None, None, :, None]
    bottom, top = plane[:, :, :1], plane[:, :, mg - 1:mg]
    left, right = plane[:, :1, :], plane[:, mg - 1:mg, :]
    inner = ((1 - t) * bottom + t * top + (1 - s) * left + s * right
             - ((1 - s) * (1 - t) * plane[:, :1, :1] + s * (1 - t) * plane[:, mg - 1:mg, :1]
                + (1 - s) * t * plane[:, :1, mg - 1:mg] + s * t * plane[:, mg - 1:mg, mg - 1:mg]))
    plane[:, 1:-1, 1:-1] = inner[:, 1:-1, 1:-1]

    plane = _relax_interior(plane, rest_h, rest_v, strategy)
    grid[:, 1:-1, 1:-1] = _from_plane(plane, axis, tu, tv)[:, 1:-1, 1:-1]
    return grid


def insert_high_order_nodes(linear: LinearSphereMesh, p_geom: int,
                            strategy) -> HighOrderMesh:
    """Attach order-``p_geom`` control nodes to every element of ``linear``."""
    if not (1 <= p_geom <= MAX_ORDER):
        raise OrderOutOfRange(f"p_geom {p_geom} outside [1, {MAX_ORDER}]")
    if isinstance(strategy, NaiveProjection):
        grid = _naive_grid(linear, p_geom, strategy)
    elif isinstance(strategy, GeodesicOptimized):
        grid = _optimized_grid(linear, p_geom, strategy)
    else:
        raise TypeError(f"unknown node strategy {strategy!r}")
    return HighOrderMesh(linear=linear, strategy=strategy, p_geom=p_geom,
                         control_nodes=_grid_to_flat(grid))


def resolve_strategy(strategy):
    """Accept a strategy instance or its registered name."""
    if isinstance(strategy, (NaiveProjection, GeodesicOptimized)):
        return strategy
    if strategy == "naive":
        return NaiveProjection()
    if strategy == "optimized":
        return GeodesicOptimized()
    raise ValueError(f"unknown node strategy {strategy!r}")


def build_sphere_mesh(n_per_face: int, p_geom: int, strategy) -> HighOrderMesh:
    """Generate the linear cubed sphere and insert high-order nodes."""
    return insert_high_order_nodes(generate_cubed_sphere(n_per_face),
                                   p_geom, resolve_strategy(strategy))


def mesh_error(mesh) -> float:
    """RMS radial deviation of the mesh vertices (blind to interior nodes)."""
    vertices = mesh.linear.vertices if isinstance(mesh, HighOrderMesh) else mesh.vertices
    dev = 1.0 - np.linalg.norm(vertices, axis=-1)
    return float(np.sqrt(np.mean(dev * dev)))


def _sampled_radial_deviation(mesh: HighOrderMesh, sampling_order: int) -> np.ndarray:
    """1 - |x| of every element map on the sampling GLL grid, (E, ms, ms)."""
    geom_nodes, _ = gll_nodes_weights(mesh.p_geom)
    sample_nodes, _ = gll_nodes_weights(sampling_order)
    resamp = lagrange_matrix(geom_nodes, sample_nodes)
    x = np.einsum("ia,jb,eabc->eijc", resamp, resamp, mesh.node_grid())
    return 1.0 - np.linalg.norm(x, axis=-1)


def geometric_approximation_error(mesh: HighOrderMesh,
                                  sampling_order: int | None = None) -> float:
    """RMS radial deviation of ALL mapped sample points, the study metric.

    Defaults to a (p_geom+3)^2 tensor GLL sampling grid per element so
    that off-node excursions of the map are visible.
    """
    so = mesh.p_geom + 2 if sampling_order is None else int(sampling_order)
    dev = _sampled_radial_deviation(mesh, so)
    return float(np.sqrt(np.mean(dev * dev)))


def per_element_gae_map(mesh: HighOrderMesh,
                        sampling_order: int | None = None) -> np.ndarray:
    """Per-element RMS radial deviation on the same sampling grid."""
    so = mesh.p_geom + 2 if sampling_order is None else int(sampling_order)
    dev = _sampled_radial_deviation(mesh, so)
    return np.sqrt(np.mean(dev * dev, axis=(1, 2)))


def _edge_control_nodes(mesh: HighOrderMesh, elem: int, loc: int) -> np.ndarray:
    mg = mesh.p_geom + 1
    grid_ji = mesh.control_nodes[elem].reshape(mg, mg, 3)  # [j, i]
    if loc == 0:
        return grid_ji[0, :]
    if loc == 1:
        return grid_ji[:, mg - 1]
    if loc == 2:
        return grid_ji[mg - 1, :]
    return grid_ji[:, 0]


def shared_edge_mismatch(mesh: HighOrderMesh) -> float:
    """Max distance between the two control node sequences of shared edges."""
    worst = 0.0
    for ea, la, eb, lb in mesh.linear.edges:
        ta = _edge_control_nodes(mesh, ea, la)
        tb = _edge_control_nodes(mesh, eb, lb)
        if mesh.linear.edge_flip[ea, la]:
            tb = tb[::-1]
        worst = max(worst, float(np.max(np.linalg.norm(ta - tb, axis=-1))))
    return worst


# ---------------------------------------------------------------------------
# mesh file format

_STRATEGY_NAMES = {"naive": NaiveProjection, "optimized": GeodesicOptimized}


def save_mesh(mesh: HighOrderMesh, path) -> None:
    """Write the mesh JSON: vertices, corner ids, per-element control nodes."""
    payload = {
        "n_per_face": mesh.n_per_face,
        "p_geom": mesh.p_geom,
        "strategy": mesh.strategy.name,
        "vertices": mesh.linear.vertices.tolist(),
        "elements": mesh.linear.elements.tolist(),
        "control_nodes": mesh.control_nodes.tolist(),
    }
    if isinstance(mesh.strategy, NaiveProjection):
        payload["p_geom_fixed"] = mesh.strategy.p_geom_fixed
    Path(path).write_text(json.dumps(payload))


def load_mesh(path) -> HighOrderMesh:
    """Read and validate a mesh JSON file.

    Rejects, with MeshFormatError, anything violating the format
    invariants: non-unit vertices, open or misoriented topology, corner
    mismatch, leaky shared edges, off-sphere optimized control nodes.
    """
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MeshFormatError(f"cannot read mesh file {path}: {exc}") from exc

    required = ("n_per_face", "p_geom", "strategy", "vertices", "elements",
                "control_nodes")
    missing = [k for k in required if k not in payload]
    if missing:
        raise MeshFormatError(f"mesh file misses keys {missing}")
    name = payload["strategy"]
    if name not in _STRATEGY_NAMES:
        raise MeshFormatError(f"unknown strategy {name!r}")
    if name == "naive":
        strategy = NaiveProjection(int(payload.get("p_geom_fixed", 2)))
    else:
        strategy = GeodesicOptimized()

    try:
        n = int(payload["n_per_face"])
        p_geom = int(payload["p_geom"])
        vertices = np.asarray(payload["vertices"], dtype=float)
        elements = np.asarray(payload["elements"], dtype=int)
        control = np.asarray(payload["control_nodes"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MeshFormatError(f"malformed mesh arrays: {exc}") from exc

    mg = p_geom + 1
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshFormatError(f"vertices must be (V, 3), got {vertices.shape}")
    if elements.ndim != 2 or elements.shape[1] != 4:
        raise MeshFormatError(f"elements must be (E, 4), got {elements.shape}")
    if control.shape != (elements.shape[0], mg * mg, 3):
        raise MeshFormatError(
            f"control_nodes shape {control.shape} does not match "
            f"{elements.shape[0]} elements at order {p_geom}")
    if elements.min() < 0 or elements.max() >= len(vertices):
        raise MeshFormatError("element corner index out of range")

    dev = np.abs(1.0 - np.linalg.norm(vertices, axis=-1))
    if np.max(dev) > 1e-12:
        raise MeshFormatError(
            f"vertex off the unit sphere by {np.max(dev):.3e} (> 1e-12)")

    try:
        edges, ne, nl, fl = _build_edge_tables(elements)
    except NonConformingEdge as exc:
        raise MeshFormatError(str(exc)) from exc

    # owning cube face from the dominant signed axis of the centroid
    centroid = vertices[elements].mean(axis=1)
    scores = centroid @ _FACE_AXES[:, 0].T
    face_id = np.argmax(scores, axis=-1)

    arcs = [np.arccos(np.clip(np.dot(vertices[elements[ea][_EDGE_CORNERS[la][0]]],
                                     vertices[elements[ea][_EDGE_CORNERS[la][1]]]),
                              -1.0, 1.0))
            for ea, la, _, _ in edges]
    linear = LinearSphereMesh(
        n_per_face=n, vertices=vertices, elements=elements, face_id=face_id,
        edges=edges, neighbor_elem=ne, neighbor_edge=nl, edge_flip=fl,
        h=float(np.max(arcs)))
    _check_counts_and_orientation(linear)

    mesh = HighOrderMesh(linear=linear, strategy=strategy, p_geom=p_geom,
                         control_nodes=control)

    corner_flat = (0, mg - 1, mg * mg - 1, mg * (mg - 1))
    corner_nodes = control[:, corner_flat, :]
    gap = np.max(np.linalg.norm(corner_nodes - vertices[elements], axis=-1))
    if gap > 1e-12:
        raise MeshFormatError(
            f"control corner node {gap:.3e} away from its mesh vertex (> 1e-12)")

    leak = shared_edge_mismatch(mesh)
    if leak > 1e-12:
        raise MeshFormatError(f"shared edge leaks by {leak:.3e} (> 1e-12)")

    if name == "optimized":
        off = np.max(np.abs(1.0 - np.linalg.norm(control, axis=-1)))
        if off > 1e-12:
            raise MeshFormatError(
                f"optimized control node off the sphere by {off:.3e} (> 1e-12)")
    return mesh
