"""Symmetric MVEE solver and John-position preconditioning.

The numeric route computes the maximum-volume inscribed ellipsoid of a
centrally symmetric polytope {x : <g_i, x> <= 1} through polar duality: it is
the polar of the minimum-volume centered ellipsoid enclosing the facet
normals {+-g_i}.  One Khachiyan-style solver therefore serves both
directions.  Analytic transforms cover the lp balls and the corner simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpan, NoConvergence, UnsupportedSet
from .sets import Ball, ConvexSet, HPolytope, LinearImage, Product, Simplex, VPolytope

__all__ = [
    "JohnDecomposition", "Preconditioner", "mvee_symmetric",
    "john_precondition", "lopsided_counterexample",
]


@dataclass
class JohnDecomposition:
    """Contact points xi_i and weights c_i with sum c_i xi_i xi_i^T = I."""

    contacts: np.ndarray  # (m, d), unit vectors in +- pairs
    weights: np.ndarray   # (m,), positive, sum = d

    def identity_residual(self) -> float:
        d = self.contacts.shape[1]
        acc = (self.contacts.T * self.weights) @ self.contacts
        return float(np.linalg.norm(acc - np.eye(d)))

    def weight_sum_error(self) -> float:
        return float(abs(self.weights.sum() - self.contacts.shape[1]))

    def mean_residual(self) -> float:
        return float(np.linalg.norm(self.weights @ self.contacts))


@dataclass
class Preconditioner:
    """Invertible change of frame A (plus a shift for the simplex route).

    Points map as p' = A p + shift and losses as l' = A^{-T} l, so the
    pairing <p', l'> differs from <p, l> only by the constant <shift', l'>.
    """

    forward: np.ndarray
    source: ConvexSet
    target: ConvexSet
    shift: np.ndarray | None = None
    inverse: np.ndarray = field(init=False)
    inverse_transpose: np.ndarray = field(init=False)

    def __post_init__(self):
        self.forward = np.asarray(self.forward, dtype=float)
        self.inverse = np.linalg.inv(self.forward)
        self.inverse_transpose = self.inverse.T
        if self.shift is not None:
            self.shift = np.asarray(self.shift, dtype=float)

    def point_to_target(self, p: np.ndarray) -> np.ndarray:
        out = self.forward @ p
        if self.shift is not None:
            out = out + self.shift
        return out

    def point_to_source(self, p_prime: np.ndarray) -> np.ndarray:
        if self.shift is not None:
            p_prime = p_prime - self.shift
        return self.inverse @ p_prime

    def loss_to_target(self, l: np.ndarray) -> np.ndarray:
        return self.inverse_transpose @ l

    def loss_to_source(self, l_prime: np.ndarray) -> np.ndarray:
        return self.forward.T @ l_prime


def mvee_symmetric(points, tol: float = 1e-6, max_iter: int = 100_000):
    """Minimum-volume centered ellipsoid {x : x^T H x <= 1} of +-points.

    Runs Khachiyan multiplicative-weight updates (with Wolfe-Atwood decrease
    steps) on the centered second-moment problem max log det sum_i u_i x_i
    x_i^T.  Points are treated as symmetric pairs +-x_i, so the ellipsoid
    center is fixed at the origin.  Returns (H, u) where u are the simplex
    weights; support points (u_i > 0) touch the boundary at convergence.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < P.shape[1]:
        raise DegenerateSpan("need at least d points of dimension d")
    n, d = P.shape
    if np.linalg.matrix_rank(P, tol=1e-12) < d:
        raise DegenerateSpan("points do not span R^d")
    if tol <= 0:
        raise ValueError("tol must be positive")

    u = np.full(n, 1.0 / n)
    V = (P.T * u) @ P
    Vinv = np.linalg.inv(V)

    def mahalanobis() -> np.ndarray:
        return np.einsum("ij,jk,ik->i", P, Vinv, P)

    g = mahalanobis()
    for it in range(max_iter):
        j_up = int(np.argmax(g))
        g_up = g[j_up]
        support = u > 0
        g_dn = np.where(support, g, np.inf)
        j_dn = int(np.argmin(g_dn))
        g_lo = g_dn[j_dn]
        if g_up <= d * (1.0 + tol) and g_lo >= d * (1.0 - tol):
            break
        if g_up - d >= d - g_lo:
            j, gj = j_up, g_up
            beta = (gj - d) / (d * (gj - 1.0))
        else:
            j, gj = j_dn, g_lo
            if u[j] > 1.0 - 1e-12:
                j, gj = j_up, g_up
                beta = (gj - d) / (d * (gj - 1.0))
            elif gj <= 1.0 + 1e-12:
                beta = -u[j] / (1.0 - u[j])  # deep-interior point: drop it
            else:
                beta = max((gj - d) / (d * (gj - 1.0)), -u[j] / (1.0 - u[j]))
        u *= 1.0 - beta
        u[j] += beta
        u[u < 1e-17] = 0.0
        x = P[j]
        # Sherman-Morrison update of Vinv for V <- (1-b) V + b x x^T
        Vinv /= 1.0 - beta
        Vx = Vinv @ x
        Vinv -= np.outer(Vx, Vx) * (beta / (1.0 + beta * (x @ Vx)))
        if (it + 1) % 512 == 0:  # refresh against drift
            u /= u.sum()
            V = (P.T * u) @ P
            Vinv = np.linalg.inv(V)
        g = mahalanobis()
    else:
        raise NoConvergence(f"MVEE did not converge in {max_iter} iterations")

    V = (P.T * u) @ P
    g = np.einsum("ij,jk,ik->i", P, np.linalg.inv(V), P)
    H = np.linalg.inv(V) / float(g.max())  # inflate so every point is inside
    return H, u


def _decomposition_from_weights(A_inv: np.ndarray, normals: np.ndarray,
                                u: np.ndarray, cut: float = 1e-10) -> JohnDecomposition:
    d = A_inv.shape[0]
    keep = u > cut
    xi = normals[keep] @ A_inv.T
    w = d * u[keep]
    contacts = np.vstack([xi, -xi])
    weights = np.concatenate([w, w]) / 2.0
    return JohnDecomposition(contacts, weights)


def _john_numeric_symmetric(set_: ConvexSet, tol: float = 1e-9):
    G, h = set_.hrep()
    if np.any(h <= 0):
        raise UnsupportedSet("symmetric numeric route needs origin in the interior")
    normals = G / h[:, None]
    _, u = mvee_symmetric(normals, tol=tol)
    d = normals.shape[1]
    V = (normals.T * u) @ normals
    # A P in John position for A = (d V)^{1/2}; contacts are A^{-1} g_i.
    evals, evecs = np.linalg.eigh(d * V)
    if evals.min() <= 0:
        raise DegenerateSpan("MVEE second-moment matrix is singular")
    A = (evecs * np.sqrt(evals)) @ evecs.T
    A_inv = (evecs / np.sqrt(evals)) @ evecs.T
    decomp = _decomposition_from_weights(A_inv, normals, u)
    return A, decomp


def _regular_simplex_vertices(d: int) -> np.ndarray:
    """Vertices of the regular d-simplex centered at 0 with inradius 1."""
    ones = np.ones(d + 1)
    v = ones.copy()
    v[0] += np.linalg.norm(ones)  # Householder vector sending 1 to |1| e_1
    Hh = np.eye(d + 1) - 2.0 * np.outer(v, v) / (v @ v)
    basis = Hh[:, 1:]  # orthonormal basis of the hyperplane sum x = 0
    centered = np.eye(d + 1) - ones / (d + 1)
    y = centered @ basis  # (d+1, d) regular simplex, circumradius sqrt(d/(d+1))
    inradius = math.sqrt(d / (d + 1)) / d
    return y / inradius


def john_precondition(set_: ConvexSet, tol: float = 1e-9):
    """Invertible A (plus shift for the simplex) putting the set in John position.

    Returns (Preconditioner, JohnDecomposition) with the decomposition taken
    in the target frame.  Supports lp balls analytically, the corner simplex
    via the regular-simplex transform, and symmetric polytopes/products
    numerically through the MVEE of their facet normals.
    """
    d = set_.dim
    if isinstance(set_, Ball):
        if set_.p == 1.0:
            # Inscribed ball of B1(r) has radius r/sqrt(d); contacts sit on
            # every one of the 2^d facets of the rescaled cross-polytope.
            if d > 12:
                raise UnsupportedSet("B1 John decomposition needs 2^d contacts (d <= 12)")
            A = np.eye(d) * (math.sqrt(d) / set_.radius)
            target = Ball(1.0, d, math.sqrt(d))
            G, _ = target.hrep()
            contacts = G / math.sqrt(d)
            weights = np.full(contacts.shape[0], d / contacts.shape[0])
            decomp = JohnDecomposition(contacts, weights)
        else:  # inf and 2: inscribed ball is already round
            A = np.eye(d) / set_.radius
            target = Ball(set_.p, d, 1.0)
            eye_pm = np.vstack([np.eye(d), -np.eye(d)])
            decomp = JohnDecomposition(eye_pm, np.full(2 * d, 0.5))
        return Preconditioner(A, set_, target), decomp

    if isinstance(set_, Simplex):
        verts = _regular_simplex_vertices(d)
        W = (verts[1:] - verts[0]).T  # columns: images of e_i - 0
        shift = verts[0]
        target = VPolytope(verts)
        contacts = -verts / d
        weights = np.full(d + 1, d / (d + 1))
        return Preconditioner(W, set_, target, shift=shift), JohnDecomposition(contacts, weights)

    if isinstance(set_, LinearImage):
        inner_pre, decomp = john_precondition(set_.inner, tol=tol)
        A = inner_pre.forward @ set_.inverse
        return Preconditioner(A, set_, inner_pre.target, shift=inner_pre.shift), decomp

    if isinstance(set_, (HPolytope, Product, VPolytope)):
        if not set_.is_symmetric():
            raise UnsupportedSet("numeric John position requires central symmetry")
        if isinstance(set_, VPolytope):
            facets = set_.polar().vertex_array()  # vertices of the polar = facet normals
            probe = HPolytope(facets, np.ones(facets.shape[0]))
            A, decomp = _john_numeric_symmetric(probe, tol=tol)
        else:
            A, decomp = _john_numeric_symmetric(set_, tol=tol)
        return Preconditioner(A, set_, LinearImage(A, set_)), decomp

    raise UnsupportedSet(f"John position unsupported for {type(set_).__name__}")


def lopsided_counterexample(d: int):
    """Ellipsoid inside [B_2, sqrt(d) B_2] with an endomorphism of Frobenius
    norm Omega(d): axes (sqrt(d),...,sqrt(d),1,...,1) and M = D U D^{-1} for
    the permutation U exchanging long and short axes."""
    if d < 2:
        raise ValueError("need d >= 2")
    k = d // 2
    s = np.ones(d)
    s[:k] = math.sqrt(d)
    D = np.diag(s)
    U = np.zeros((d, d))
    for i in range(k):
        U[i, k + i] = 1.0
        U[k + i, i] = 1.0
    for i in range(2 * k, d):
        U[i, i] = 1.0
    M = D @ U @ np.diag(1.0 / s)
    ellipsoid = LinearImage(D, Ball(2.0, d))
    return ellipsoid, M
