import itertools
import math

import numpy as np
import pytest

from swapreg.errors import DegenerateSpan, UnsupportedSet
from swapreg.john import (john_precondition, lopsided_counterexample,
                          mvee_symmetric)
from swapreg.sets import Ball, HPolytope, Product, Simplex, VPolytope

RNG = np.random.default_rng(99)


def test_mvee_unit_directions():
    H, w = mvee_symmetric(np.eye(3))
    assert np.allclose(H, np.eye(3), atol=1e-6)
    assert np.allclose(w, np.full(3, 1 / 3), atol=1e-6)


def test_mvee_axis_aligned():
    H, _ = mvee_symmetric(np.array([[2.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(H, np.diag([0.25, 1.0]), atol=1e-6)


def _grid_ellipsoid_family(points):
    """Brute-force min-volume search over rotated diagonal ellipsoids (d=3)."""
    best = np.inf
    angles = np.linspace(0, np.pi / 2, 4)
    radii = np.linspace(0.5, 4.0, 8)
    for ax, ay, az in itertools.product(radii, repeat=3):
        D = np.diag([1 / ax ** 2, 1 / ay ** 2, 1 / az ** 2])
        for a, b, c in itertools.product(angles, repeat=3):
            Rz = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
            Ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
            Rx = np.array([[1, 0, 0], [0, np.cos(c), -np.sin(c)], [0, np.sin(c), np.cos(c)]])
            R = Rz @ Ry @ Rx
            H = R @ D @ R.T
            if np.max(np.einsum("ij,jk,ik->i", points, H, points)) <= 1.0:
                vol = 1.0 / math.sqrt(np.linalg.det(H))  # up to the unit-ball factor
                best = min(best, vol)
    return best


def test_mvee_random_cloud_beats_grid_family():
    pts = RNG.normal(size=(20, 3))
    H, w = mvee_symmetric(pts, tol=1e-7)
    mah = np.einsum("ij,jk,ik->i", pts, H, pts)
    assert mah.max() <= 1.0 + 1e-9  # containment
    assert np.sum(mah >= 1.0 - 1e-3) >= 3  # at least d boundary contacts
    ours = 1.0 / math.sqrt(np.linalg.det(H))
    assert ours <= _grid_ellipsoid_family(pts) + 1e-9  # no grid candidate is smaller


def test_mvee_degenerate_span():
    with pytest.raises(DegenerateSpan):
        mvee_symmetric(np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]))


def test_john_cube_identity():
    pre, dec = john_precondition(Ball(math.inf, 4))
    assert np.allclose(pre.forward, np.eye(4))
    assert dec.identity_residual() <= 1e-12
    assert dec.weight_sum_error() <= 1e-12
    assert np.allclose(np.sort(dec.weights), 0.5)


def test_john_cross_polytope_scaling():
    d = 3
    pre, dec = john_precondition(Ball(1.0, d))
    assert np.allclose(pre.forward, math.sqrt(d) * np.eye(d))
    # facet distance of B1 from the origin is 1/sqrt(d): unit vectors map inside
    for _ in range(50):
        u = RNG.normal(size=d)
        u /= np.linalg.norm(u)
        assert Ball(1.0, d).contains(pre.inverse @ u, 1e-9)
    assert dec.identity_residual() <= 1e-9
    assert abs(dec.weights.sum() - d) <= 1e-9


def test_john_product_containment():
    prod = Product((Ball(1.0, 2), Ball(math.inf, 2)))
    pre, dec = john_precondition(prod)
    assert dec.identity_residual() <= 1e-4
    assert dec.weight_sum_error() <= 1e-4
    target = pre.target
    boundary = target.boundary_sample(RNG, 300)
    norms = np.linalg.norm(boundary, axis=1)
    assert norms.min() >= 1.0 - 1e-5
    assert norms.max() <= 2.0 + 1e-6  # sqrt(d) with d = 4


def test_john_contacts_on_both_boundaries():
    normals = RNG.normal(size=(6, 3))
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    hp = HPolytope(np.vstack([normals, -normals]), np.ones(12))
    pre, dec = john_precondition(hp)
    assert dec.identity_residual() <= 1e-4
    assert abs(dec.weights.sum() - 3) <= 1e-4
    assert dec.mean_residual() <= 1e-9
    target = pre.target
    for xi, w in zip(dec.contacts, dec.weights):
        if w < 1e-6:
            continue
        assert abs(np.linalg.norm(xi) - 1.0) <= 1e-3
        assert target.gauge(xi) <= 1.0 + 1e-6
        assert target.gauge(xi) >= 1.0 - 1e-3


def test_john_symmetric_vpolytope():
    pts = RNG.normal(size=(5, 3))
    vp = VPolytope(np.vstack([pts, -pts]))
    pre, dec = john_precondition(vp)
    assert dec.identity_residual() <= 1e-4
    boundary = pre.target.boundary_sample(RNG, 200)
    norms = np.linalg.norm(boundary, axis=1)
    assert norms.min() >= 1.0 - 1e-4
    assert norms.max() <= math.sqrt(3) + 1e-6


def test_john_simplex_analytic():
    d = 4
    pre, dec = john_precondition(Simplex(d))
    assert dec.identity_residual() <= 1e-9
    assert abs(dec.weights.sum() - d) <= 1e-9
    assert dec.mean_residual() <= 1e-9
    # corners map onto the regular simplex with circumradius d, inradius 1
    corners = Simplex(d).vertex_array()
    images = corners @ pre.forward.T + pre.shift
    assert np.allclose(np.linalg.norm(images, axis=1), d, atol=1e-9)
    assert np.allclose(images.mean(axis=0), 0.0, atol=1e-9)


def test_john_rejects_nonsymmetric_numeric():
    skew = VPolytope([[2.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(UnsupportedSet):
        john_precondition(skew)


def test_lopsided_counterexample_d4():
    ell, M = lopsided_counterexample(4)
    assert (M ** 2).sum() == pytest.approx(8.5)
    assert (M ** 2).sum() >= 4 * 2  # d * floor(d/2)
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[1, 3] = 2.0
    expected[2, 0] = expected[3, 1] = 0.5
    assert np.allclose(M, expected)
    boundary = ell.boundary_sample(RNG, 1000)
    for p in boundary:
        assert ell.contains(M @ p, 1e-7)


def test_lopsided_counterexample_d2_and_odd():
    _, M2 = lopsided_counterexample(2)
    assert (M2 ** 2).sum() == pytest.approx(2.5)
    ell5, M5 = lopsided_counterexample(5)
    assert (M5 ** 2).sum() >= 5 * 2
    for p in ell5.boundary_sample(RNG, 200):
        assert ell5.contains(M5 @ p, 1e-7)
    with pytest.raises(ValueError):
        lopsided_counterexample(1)


def test_lopsided_sandwich():
    d = 4
    ell, _ = lopsided_counterexample(d)
    boundary = ell.boundary_sample(RNG, 500)
    norms = np.linalg.norm(boundary, axis=1)
    assert norms.min() >= 1.0 - 1e-9
    assert norms.max() <= math.sqrt(d) + 1e-9
