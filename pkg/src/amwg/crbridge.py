"""Crouzeix-Raviart interpolation of DG functions and the weak-gradient
identity ``grad_w v = grad_h I_CR v``.

The CR gradient is recovered by solving each element's 3x3 reconstruction
system (edge means -> linear polynomial), deliberately not by reusing the
weak-gradient boundary sum, so that the identity check compares two
independent code paths.
"""
from dataclasses import dataclass

import numpy as np

from .mwg import BoundaryMode, DgFunction, WeakGradientField, qb_averages, weak_gradient


@dataclass(frozen=True, eq=False)
class CrFunction:
    mesh: object
    edge_values: np.ndarray  # one edge mean per edge


def cr_interpolate(v, mode=BoundaryMode.HomogeneousDirichlet):
    dofs = qb_averages(v)
    if mode is BoundaryMode.HomogeneousDirichlet:
        dofs = np.where(v.mesh.is_boundary, 0.0, dofs)
    return CrFunction(v.mesh, dofs)


def _reconstruction(w):
    """Coefficients (c0, cx, cy) of the linear polynomial on each element."""
    mesh = w.mesh
    mid = mesh.midpoints[mesh.elem_edges]  # (nt, 3, 2)
    # shift by centroid for conditioning
    centre = mesh.vertices[mesh.triangles].mean(axis=1)
    rel = mid - centre[:, None, :]
    V = np.concatenate([np.ones(rel.shape[:2] + (1,)), rel], axis=2)
    rhs = w.edge_values[mesh.elem_edges]
    return np.linalg.solve(V, rhs[..., None])[..., 0], centre


def cr_gradient(w):
    coef, _ = _reconstruction(w)
    return WeakGradientField(w.mesh, coef[:, 1:])


def cr_to_dg(w):
    """Embed a CR function into the DG space (vertex values per element)."""
    mesh = w.mesh
    coef, centre = _reconstruction(w)
    rel = mesh.vertices[mesh.triangles] - centre[:, None, :]
    vals = coef[:, None, 0] + np.einsum("tid,td->ti", rel, coef[:, 1:])
    return DgFunction(mesh, vals)


def verify_identity(v, mode=BoundaryMode.HomogeneousDirichlet):
    """Max elementwise ``|grad_w v - grad_h I_CR v|``."""
    a = weak_gradient(v, mode).values
    b = cr_gradient(cr_interpolate(v, mode)).values
    return float(np.max(np.linalg.norm(a - b, axis=1)))
