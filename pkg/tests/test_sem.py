"""Reference element, quadrature, geometry, traces and norms."""

import math

import numpy as np
import pytest

from mmfsphere.errors import OrderOutOfRange
from mmfsphere.sem import (compute_geometry, diff_matrix, element_traces,
                           exchange_traces, gll_nodes_weights, grad_physical,
                           integrate, l2_norm, lagrange_matrix,
                           lift_edge_flux, linf_norm, make_reference_element,
                           weak_gradient_volume)
from mmfsphere.sphere_mesh import build_sphere_mesh

from conftest import make_geometry


@pytest.mark.parametrize("p", [1, 2, 3, 5, 8, 12, 16])
def test_gll_basic_structure(p):
    nodes, weights = gll_nodes_weights(p)
    assert nodes.shape == weights.shape == (p + 1,)
    assert nodes[0] == -1.0 and nodes[-1] == 1.0
    assert np.all(np.diff(nodes) > 0)
    assert np.all(weights > 0)
    assert abs(weights.sum() - 2.0) < 1e-14


@pytest.mark.parametrize("p", [2, 4, 7, 11])
def test_gll_quadrature_exact_to_2p_minus_1(p):
    """GLL with p+1 points integrates monomials exactly through 2p-1."""
    nodes, weights = gll_nodes_weights(p)
    for k in range(2 * p):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.dot(weights, nodes ** k) - exact) < 1e-13
    # and visibly fails one degree past that
    k = 2 * p
    exact = 2.0 / (k + 1)
    assert abs(np.dot(weights, nodes ** k) - exact) > 1e-8


def test_gll_nodes_match_legendre_derivative_roots():
    """Interior GLL nodes are the roots of P'_p, found independently."""
    p = 6
    nodes, _ = gll_nodes_weights(p)
    coeffs = np.zeros(p + 1)
    coeffs[p] = 1.0
    dlegendre = np.polynomial.legendre.Legendre(coeffs).deriv()
    assert np.allclose(np.sort(dlegendre.roots()), nodes[1:-1], atol=1e-13)


def test_reference_element_order_bounds():
    make_reference_element(1)
    make_reference_element(16)
    with pytest.raises(OrderOutOfRange):
        make_reference_element(0)
    with pytest.raises(OrderOutOfRange):
        make_reference_element(17)


@pytest.mark.parametrize("p", [3, 6, 9])
def test_diff_matrix_exact_on_polynomials(p):
    nodes, _ = gll_nodes_weights(p)
    d = diff_matrix(nodes)
    for k in range(p + 1):
        expected = k * nodes ** (k - 1) if k else np.zeros_like(nodes)
        assert np.max(np.abs(d @ nodes ** k - expected)) < 1e-11


def test_lagrange_matrix_interpolates_and_partitions_unity(rng):
    nodes, _ = gll_nodes_weights(5)
    targets = rng.uniform(-1, 1, size=17)
    mat = lagrange_matrix(nodes, targets)
    assert np.allclose(mat.sum(axis=1), 1.0, atol=1e-13)
    coeff = rng.standard_normal(6)
    poly = np.polynomial.Polynomial(coeff)
    assert np.allclose(mat @ poly(nodes), poly(targets), atol=1e-12)


def test_sphere_area_both_strategies(geom_opt_p6):
    assert abs(geom_opt_p6.area - 4 * math.pi) < 1e-8
    ones = np.ones(geom_opt_p6.x.shape[:-1])
    assert abs(integrate(ones, geom_opt_p6) - geom_opt_p6.area) < 1e-13


def test_geometry_dual_basis_and_normals(geom_opt):
    g = geom_opt
    assert np.all(g.jac > 0)
    assert np.allclose(np.linalg.norm(g.normal, axis=-1), 1.0, atol=1e-13)
    # duality a_alpha . t_beta = delta
    for a, t, delta in ((g.a1, g.t1, 1.0), (g.a1, g.t2, 0.0),
                        (g.a2, g.t1, 0.0), (g.a2, g.t2, 1.0)):
        dots = np.einsum("emnc,emnc->emn", a, t)
        assert np.max(np.abs(dots - delta)) < 1e-10
    # normal orthogonal to both tangents
    for t in (g.t1, g.t2):
        assert np.max(np.abs(np.einsum("emnc,emnc->emn", g.normal, t))) < 1e-12


def test_trace_exchange_is_involution(geom_opt, rng):
    u = rng.standard_normal(geom_opt.x.shape[:-1])
    tr = element_traces(u)
    assert np.array_equal(exchange_traces(exchange_traces(tr, geom_opt),
                                          geom_opt), tr)


def test_traces_watertight_across_edges(geom_opt, geom_naive):
    """Node positions agree between the two sides of every edge."""
    for g in (geom_opt, geom_naive):
        xt = element_traces(g.x)
        gap = np.linalg.norm(exchange_traces(xt, g) - xt, axis=-1)
        assert np.max(gap) < 1e-12


def test_smooth_function_trace_continuity(geom_opt):
    u = np.sin(geom_opt.x[..., 0]) * geom_opt.x[..., 2]
    tr = element_traces(u)
    assert np.max(np.abs(exchange_traces(tr, geom_opt) - tr)) < 1e-12


def test_integrate_odd_function_vanishes(geom_opt_p6):
    assert abs(integrate(geom_opt_p6.x[..., 2], geom_opt_p6)) < 1e-12


def test_integrate_z_squared(geom_opt_p6):
    """int z^2 over the unit sphere = 4 pi / 3."""
    val = integrate(geom_opt_p6.x[..., 2] ** 2, geom_opt_p6)
    assert abs(val - 4 * math.pi / 3) < 1e-9


def test_grad_physical_of_linear_field(geom_opt):
    """The surface gradient of f = a.x is the tangential part of a."""
    a = np.array([0.3, -1.1, 0.7])
    g = geom_opt
    grad = grad_physical(g.x @ a, g)
    an = np.einsum("c,emnc->emn", a, g.normal)
    tangential = a - an[..., None] * g.normal
    assert np.max(np.linalg.norm(grad - tangential, axis=-1)) < 1e-12


def closure_defect(g):
    """|sum of per-element boundary integrals of a smooth field|.

    Elements integrate w . n over their own boundary with their own
    normal; on a closed surface the sum vanishes exactly when adjacent
    normals are opposite, so the defect measures the inter-element
    crease of the discrete surface.
    """
    w = np.stack([g.x[..., 1] ** 2, np.sin(g.x[..., 0]),
                  g.x[..., 2]], axis=-1)
    wn = np.einsum("elmc,elmc->elm", element_traces(w), g.edge_normal)
    net = lift_edge_flux(wn, g) - weak_gradient_volume(w, g)
    return abs(float(np.sum(net)))


def test_divergence_theorem_closure_spectral_vs_plateau():
    opt = [closure_defect(make_geometry(2, p, "optimized"))
           for p in (3, 5, 7)]
    naive = [closure_defect(make_geometry(2, p, "naive"))
             for p in (3, 5, 7)]
    assert opt[0] > opt[1] > opt[2]
    assert opt[0] / opt[2] > 1e3
    assert opt[2] < 1e-5
    # frozen geometry: the naive crease does not close with order
    assert all(v > 0.1 for v in naive)
    assert max(naive) / min(naive) < 2.0


def test_l2_and_linf_norms(geom_opt_p6):
    g = geom_opt_p6
    ones = np.ones(g.x.shape[:-1])
    assert abs(l2_norm(ones, g) - math.sqrt(4 * math.pi)) < 1e-8
    assert linf_norm(ones) == 1.0
    z = g.x[..., 2]
    # max |z| over GLL nodes approaches 1 only where a node hits a pole
    assert linf_norm(z) <= 1.0 + 1e-12
    mask = np.zeros(g.x.shape[0], dtype=bool)
    assert l2_norm(ones, g, mask) == 0.0


def test_inv_mass_inverts_quadrature_weights(geom_opt):
    g = geom_opt
    assert np.allclose(g.inv_mass * g.jw, 1.0, atol=1e-13)


def test_edge_measures_match_across_sides(geom_naive):
    """Shared edges carry the same arclength factor on both sides, which
    is what makes single-valued fluxes telescope even on lumpy meshes."""
    g = geom_naive
    sj = element_traces(np.ones(g.x.shape[:-1])) * g.edge_sj
    other = exchange_traces(sj, g)
    assert np.max(np.abs(other - sj)) < 1e-12
