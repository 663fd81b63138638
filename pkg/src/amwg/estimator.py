"""Residual a posteriori error estimator for the lowest-order mWG method.

For piecewise-constant ``A`` the weak flux ``A grad_w u`` is elementwise
constant, so its divergence vanishes and the element residual reduces to
``f``. The estimator then splits into the data term ``F`` and the edge
jump term.
"""
from dataclasses import dataclass

import numpy as np

from .mwg import BoundaryMode, as_field, weak_gradient
from .quadrature import TRI6_BARY, TRI6_WEIGHTS, triangle_points


@dataclass(frozen=True, eq=False)
class EstimatorBreakdown:
    eta_sq: np.ndarray
    F_term: np.ndarray
    jump_sq: np.ndarray
    osc_sq: np.ndarray

    @property
    def eta_sq_total(self):
        return float(self.eta_sq.sum())

    @property
    def F_total(self):
        return float(self.F_term.sum())

    @property
    def jump_sq_total(self):
        return float(self.jump_sq.sum())

    @property
    def osc_sq_total(self):
        return float(self.osc_sq.sum())

    @property
    def eta(self):
        return float(np.sqrt(self.eta_sq_total))


def _edge_id(e):
    return e.index if hasattr(e, "index") else int(e)


def normal_jumps(g, A=None):
    """Jump of ``A g . n`` across every edge (zero on the boundary).

    ``A`` defaults to the mesh coefficient.
    """
    mesh = g.mesh
    A = mesh.coefficient if A is None else np.asarray(A, dtype=float)
    t0, t1 = mesh.edge_adj[:, 0], mesh.edge_adj[:, 1]
    interior = t1 >= 0
    flux = A[:, None] * g.values
    # outward normals of t0 and t1 are +n_e and -n_e
    d = flux[t0] - flux[np.where(interior, t1, t0)]
    return np.where(interior, np.einsum("ed,ed->e", d, mesh.normals), 0.0)


def tangential_jumps(g):
    mesh = g.mesh
    t0, t1 = mesh.edge_adj[:, 0], mesh.edge_adj[:, 1]
    interior = t1 >= 0
    d = g.values[t0] - g.values[np.where(interior, t1, t0)]
    return np.where(interior, np.einsum("ed,ed->e", d, mesh.tangents), 0.0)


def normal_jump(e, g, A=None):
    return float(normal_jumps(g, A)[_edge_id(e)])


def tangential_jump(e, g):
    return float(tangential_jumps(g)[_edge_id(e)])


def edge_weights(mesh):
    """(1/A_max, A_min) per edge; boundary edges use their single element."""
    A = mesh.coefficient
    a0 = A[mesh.edge_adj[:, 0]]
    a1 = np.where(mesh.is_boundary, a0, A[np.maximum(mesh.edge_adj[:, 1], 0)])
    return 1.0 / np.maximum(a0, a1), np.minimum(a0, a1)


def element_residual(g, f):
    """Residual ``f + div(A grad_w u)`` at the volume quadrature points.

    The divergence term is identically zero for elementwise-constant weak
    gradients; it is kept as a hook only.
    """
    mesh = g.mesh
    pts = triangle_points(mesh.vertices, mesh.triangles, TRI6_BARY)
    return as_field(f)(pts[..., 0], pts[..., 1])


def estimate(u, f, mode=BoundaryMode.HomogeneousDirichlet, g=None):
    """Per-element estimator breakdown for the discrete solution ``u``."""
    mesh = u.mesh
    if g is None:
        g = weak_gradient(u, mode)
    R = element_residual(g, f)
    area = mesh.areas
    h2 = mesh.h**2
    Ainv = 1.0 / mesh.coefficient
    normsq = area * (R**2 @ TRI6_WEIGHTS)
    F = h2 * Ainv * normsq
    mean = R @ TRI6_WEIGHTS
    osc = h2 * Ainv * area * ((R - mean[:, None]) ** 2 @ TRI6_WEIGHTS)

    w_n, w_t = edge_weights(mesh)
    per_edge = mesh.lengths * (w_n * normal_jumps(g) ** 2 + w_t * tangential_jumps(g) ** 2)
    jump = mesh.h * per_edge[mesh.elem_edges].sum(axis=1)
    return EstimatorBreakdown(eta_sq=F + jump, F_term=F, jump_sq=jump, osc_sq=osc)


def element_estimator(tau, u, f, mode=BoundaryMode.HomogeneousDirichlet):
    b = estimate(u, f, mode)
    return {
        "eta_sq": float(b.eta_sq[tau]),
        "F_term": float(b.F_term[tau]),
        "jump_sq": float(b.jump_sq[tau]),
        "osc_sq": float(b.osc_sq[tau]),
    }


def oscillation(mesh, f):
    """Per-element ``h^2 A^-1 ||f - mean(f)||^2``."""
    pts = triangle_points(mesh.vertices, mesh.triangles, TRI6_BARY)
    R = as_field(f)(pts[..., 0], pts[..., 1])
    mean = R @ TRI6_WEIGHTS
    return mesh.h**2 / mesh.coefficient * mesh.areas * ((R - mean[:, None]) ** 2 @ TRI6_WEIGHTS)


def data_term(mesh, f):
    """Per-element ``F(f, tau) = h^2 A^-1 ||f||^2``."""
    pts = triangle_points(mesh.vertices, mesh.triangles, TRI6_BARY)
    R = as_field(f)(pts[..., 0], pts[..., 1])
    return mesh.h**2 / mesh.coefficient * mesh.areas * (R**2 @ TRI6_WEIGHTS)


def global_estimator(breakdown, subset=None):
    """Sum of ``eta^2`` over ``subset`` (all elements when None)."""
    eta = breakdown.eta_sq
    if subset is None:
        return float(eta.sum())
    idx = np.asarray(sorted(subset), dtype=np.int_)
    if idx.size == 0:
        return 0.0
    if idx[0] < 0 or idx[-1] >= eta.shape[0]:
        raise IndexError("element id out of range")
    return float(eta[idx].sum())
