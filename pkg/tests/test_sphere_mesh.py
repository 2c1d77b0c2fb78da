"""Cubed-sphere generation, node strategies, error metrics, mesh I/O."""

import json
import math

import numpy as np
import pytest

from mmfsphere.errors import (MeshFormatError, OrderOutOfRange,
                              SpringNonConvergence)
from mmfsphere.sphere_mesh import (GeodesicOptimized, NaiveProjection,
                                   build_sphere_mesh, generate_cubed_sphere,
                                   geometric_approximation_error, load_mesh,
                                   mesh_error, per_element_gae_map,
                                   resolve_strategy, save_mesh,
                                   shared_edge_mismatch)


def test_cubed_sphere_counts_and_unit_vertices():
    for n in (1, 2, 3):
        lin = generate_cubed_sphere(n)
        assert lin.elements.shape == (6 * n * n, 4)
        assert lin.vertices.shape == (6 * n * n + 2, 3)
        assert np.allclose(np.linalg.norm(lin.vertices, axis=-1), 1.0,
                           atol=1e-14)


def test_h_is_max_great_circle_edge():
    # equiangular face spacing: central edges span pi/(2n) for n >= 2
    for n in (2, 4, 8):
        assert abs(build_sphere_mesh(n, 2, "naive").h
                   - math.pi / (2 * n)) < 1e-12
    # single element per face: the corner-to-corner arc dominates
    assert abs(build_sphere_mesh(1, 1, "naive").h
               - math.acos(1.0 / 3.0)) < 1e-12


def test_mesh_error_vertices_on_sphere():
    # trivial: linear vertices are projected, so the vertex metric is 0
    assert mesh_error(build_sphere_mesh(1, 1, "naive")) <= 1e-15


def test_resolve_strategy_accepts_names_and_instances():
    assert resolve_strategy("naive").name == "naive"
    assert resolve_strategy("optimized").name == "optimized"
    inst = NaiveProjection(p_geom_fixed=3)
    assert resolve_strategy(inst) is inst
    with pytest.raises(ValueError):
        resolve_strategy("adaptive")


def test_naive_projection_rejects_bad_fixed_order():
    with pytest.raises(OrderOutOfRange):
        NaiveProjection(p_geom_fixed=0)


def test_watertight_shared_edges_both_strategies():
    for strategy in ("naive", "optimized"):
        mesh = build_sphere_mesh(2, 4, strategy)
        assert shared_edge_mismatch(mesh) <= 1e-12


def test_gae_naive_plateaus():
    vals = [geometric_approximation_error(build_sphere_mesh(2, p, "naive"))
            for p in range(2, 7)]
    assert max(vals) / min(vals) < 1.2
    # frozen regression values, h = pi/4
    expect = [7.4157e-4, 7.4080e-4, 7.5219e-4, 7.6146e-4, 7.6858e-4]
    assert np.allclose(vals, expect, rtol=1e-3)


def test_gae_optimized_decays_spectrally():
    vals = [geometric_approximation_error(
        build_sphere_mesh(2, p, "optimized")) for p in range(2, 7)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    total = vals[0] / vals[-1]
    assert total > 1e4
    # at least a factor 5 per order in the geometric mean
    assert total ** 0.25 > 5.0
    expect = [6.3772e-4, 1.4069e-4, 4.4341e-6, 4.3696e-7, 4.9236e-8]
    assert np.allclose(vals, expect, rtol=1e-3)


def test_strategy_separation_and_monotone_ratio():
    ratios = []
    for p in (3, 4, 5):
        gae_n = geometric_approximation_error(build_sphere_mesh(2, p, "naive"))
        gae_o = geometric_approximation_error(
            build_sphere_mesh(2, p, "optimized"))
        assert gae_o < gae_n
        ratios.append(gae_o / gae_n)
    assert ratios[0] > ratios[1] > ratios[2]


def test_gae_sampling_at_control_nodes_is_tiny():
    # on-sphere control nodes sampled exactly: optimized always, naive
    # only at the frozen order
    mesh = build_sphere_mesh(2, 4, "optimized")
    assert geometric_approximation_error(mesh, sampling_order=4) <= 1e-12
    mesh = build_sphere_mesh(2, 2, "naive")
    assert geometric_approximation_error(mesh, sampling_order=2) <= 1e-12


def test_per_element_gae_decomposition():
    mesh = build_sphere_mesh(2, 4, "naive")
    per = per_element_gae_map(mesh)
    total = geometric_approximation_error(mesh)
    n_samples = (mesh.p_geom + 3) ** 2
    lhs = np.sum(n_samples * per ** 2)
    rhs = mesh.n_elements * n_samples * total ** 2
    assert abs(lhs - rhs) < 1e-12 * rhs
    assert per.max() <= total * math.sqrt(mesh.n_elements) + 1e-15
    # symmetric cubed sphere: every element sees the same deviation
    assert per.max() / per.min() < 10.0


def test_spring_non_convergence_surfaces():
    strategy = GeodesicOptimized(spring_max_iter=1, spring_tol=1e-15)
    with pytest.raises(SpringNonConvergence):
        build_sphere_mesh(2, 4, strategy)


def test_mesh_roundtrip(tmp_path):
    mesh = build_sphere_mesh(2, 3, "optimized")
    path = tmp_path / "mesh.json"
    save_mesh(mesh, path)
    back = load_mesh(path)
    assert back.p_geom == mesh.p_geom
    assert back.n_per_face == mesh.n_per_face
    assert back.strategy.name == "optimized"
    assert np.allclose(back.control_nodes, mesh.control_nodes, atol=1e-15)
    assert np.array_equal(back.neighbor_elem, mesh.neighbor_elem)


def test_load_mesh_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("not json at all")
    with pytest.raises(MeshFormatError):
        load_mesh(path)
    path.write_text(json.dumps({"n_per_face": 2}))
    with pytest.raises(MeshFormatError):
        load_mesh(path)


def test_load_mesh_rejects_off_sphere_vertices(tmp_path):
    mesh = build_sphere_mesh(2, 3, "optimized")
    path = tmp_path / "mesh.json"
    save_mesh(mesh, path)
    payload = json.loads(path.read_text())
    payload["vertices"][0] = [2.0, 0.0, 0.0]
    path.write_text(json.dumps(payload))
    with pytest.raises(MeshFormatError):
        load_mesh(path)


def test_node_grid_shape_and_corners():
    mesh = build_sphere_mesh(2, 3, "naive")
    grid = mesh.node_grid()
    assert grid.shape == (mesh.n_elements, 4, 4, 3)
    corners = mesh.linear.vertices[mesh.linear.elements]
    assert np.allclose(grid[:, 0, 0], corners[:, 0], atol=1e-14)
