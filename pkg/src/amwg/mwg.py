"""Lowest-order modified weak Galerkin discretization.

The unknown is a discontinuous piecewise-linear function (three vertex
values per triangle). Its edge component is never stored: it is the edge
mean of the two-sided average of traces, and on the boundary it is set to
zero so that homogeneous Dirichlet data are imposed through the weak
gradient and the boundary part of the stabilization.
"""
import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .quadrature import TRI6_BARY, TRI6_WEIGHTS, triangle_points


class BoundaryMode(enum.Enum):
    HomogeneousDirichlet = "homogeneous_dirichlet"


@dataclass(frozen=True, eq=False)
class DgFunction:
    mesh: object
    coefficients: np.ndarray  # (n_elements, 3), local vertex order

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).reshape(self.mesh.n_elements, 3)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_vector(cls, mesh, x):
        return cls(mesh, np.asarray(x, dtype=float).reshape(-1, 3))

    @classmethod
    def interpolate(cls, mesh, u):
        """Vertex values of ``u(x, y)`` on every element (continuous if ``u`` is)."""
        p = mesh.vertices[mesh.triangles]
        return cls(mesh, u(p[..., 0], p[..., 1]))

    @classmethod
    def from_nodal(cls, mesh, nodal):
        return cls(mesh, np.asarray(nodal, dtype=float)[mesh.triangles])

    @property
    def vector(self):
        return self.coefficients.ravel()

    def local_gradients(self):
        """Classical elementwise gradient of the stored linears, (nt, 2)."""
        return np.einsum("ti,tid->td", self.coefficients, barycentric_gradients(self.mesh))

    def __mul__(self, alpha):
        return DgFunction(self.mesh, alpha * self.coefficients)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class WeakGradientField:
    mesh: object
    values: np.ndarray  # (n_elements, 2)


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Full (both triangles stored) symmetric matrix in CSR arrays."""

    dim: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_scipy(cls, A):
        A = sp.csr_matrix(A)
        A.sum_duplicates()
        A.sort_indices()
        return cls(A.shape[0], A.indptr, A.indices, A.data)

    def to_scipy(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.dim, self.dim))

    def matvec(self, x):
        return self.to_scipy() @ x

    def diagonal(self):
        return self.to_scipy().diagonal()

    def asymmetry(self):
        A = self.to_scipy()
        d = abs(A - A.T)
        return d.max() if d.nnz else 0.0


def barycentric_gradients(mesh):
    """Gradients of the three barycentric coordinates, (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.n_elements, 3, 2))
    for j in range(3):
        d = p[:, (j + 2) % 3] - p[:, (j + 1) % 3]
        # inward normal of the opposite edge, scaled by |e| / (2|tau|)
        out[:, j, 0] = -d[:, 1]
        out[:, j, 1] = d[:, 0]
    return out / (2.0 * mesh.areas)[:, None, None]


def trace_means(v):
    """Edge mean of each element's trace on its local edges, (nt, 3)."""
    c = v.coefficients
    return 0.5 * (c[:, [1, 2, 0]] + c[:, [2, 0, 1]])


def _side_means(v):
    mesh = v.mesh
    tm = trace_means(v).ravel()
    side0 = np.empty(mesh.n_edges)
    side1 = np.zeros(mesh.n_edges)
    owner = mesh.elem_edge_sign.ravel() > 0
    ee = mesh.elem_edges.ravel()
    side0[ee[owner]] = tm[owner]
    side1[ee[~owner]] = tm[~owner]
    return side0, side1


def qb_averages(v):
    """Q_b of the two-sided average on every edge (single trace on the boundary)."""
    s0, s1 = _side_means(v)
    return np.where(v.mesh.is_boundary, s0, 0.5 * (s0 + s1))


def qb_jumps(v):
    """Q_b of the jump (adj[0] minus adj[1]) on every edge; the trace on the boundary."""
    s0, s1 = _side_means(v)
    return s0 - s1


def _edge_index(e):
    return e.index if hasattr(e, "index") else int(e)


def qb_average(v, e):
    return float(qb_averages(v)[_edge_index(e)])


def qb_jump(v, e):
    return float(qb_jumps(v)[_edge_index(e)])


def weak_gradient(v, mode=BoundaryMode.HomogeneousDirichlet):
    mesh = v.mesh
    g = qb_averages(v)
    if mode is BoundaryMode.HomogeneousDirichlet:
        g = np.where(mesh.is_boundary, 0.0, g)
    ee = mesh.elem_edges
    flux = (mesh.lengths[ee] * g[ee] * mesh.elem_edge_sign)[..., None] * mesh.normals[ee]
    return WeakGradientField(mesh, flux.sum(axis=1) / mesh.areas[:, None])


def weak_gradient_operator(mesh, mode=BoundaryMode.HomogeneousDirichlet):
    """Sparse map from DG coefficients to the stacked weak gradients (2*nt x 3*nt)."""
    if mode is not BoundaryMode.HomogeneousDirichlet:
        raise ValueError(f"unsupported boundary mode {mode}")
    nt = mesh.n_elements
    rows, cols, vals = [], [], []
    ee = mesh.elem_edges
    interior = ~mesh.is_boundary
    for j in range(3):
        e = ee[:, j]
        w = (mesh.lengths[e] * mesh.elem_edge_sign[:, j] / mesh.areas)[:, None] * mesh.normals[e]
        for side in (0, 1):
            s = mesh.edge_adj[e, side]
            ok = interior[e] & (s >= 0)
            t_ok = np.flatnonzero(ok)
            s_ok = s[ok]
            # local index of edge e inside neighbour s
            jl = np.argmax(ee[s_ok] == e[ok, None], axis=1)
            for k in (1, 2):
                dof = 3 * s_ok + (jl + k) % 3
                for comp in range(2):
                    rows.append(2 * t_ok + comp)
                    cols.append(dof)
                    vals.append(0.25 * w[ok, comp])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * nt, 3 * nt)
    )


def jump_operator(mesh):
    """Sparse map from DG coefficients to Q_b jumps on all edges (ne x 3*nt)."""
    nt = mesh.n_elements
    sign = mesh.elem_edge_sign
    rows, cols, vals = [], [], []
    for j in range(3):
        for k in (1, 2):
            rows.append(mesh.elem_edges[:, j])
            cols.append(3 * np.arange(nt) + (j + k) % 3)
            vals.append(0.5 * sign[:, j])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(mesh.n_edges, 3 * nt)
    )


def stabilization_weights(mesh):
    """|e| * sum of h^-1 over the elements containing e."""
    hinv = 1.0 / mesh.h
    w = hinv[mesh.edge_adj[:, 0]]
    interior = ~mesh.is_boundary
    w[interior] += hinv[mesh.edge_adj[interior, 1]]
    return mesh.lengths * w


def assemble_system(mesh, mode=BoundaryMode.HomogeneousDirichlet):
    G = weak_gradient_operator(mesh, mode)
    J = jump_operator(mesh)
    wgrad = np.repeat(mesh.coefficient * mesh.areas, 2)
    M = G.T @ sp.diags(wgrad) @ G + J.T @ sp.diags(stabilization_weights(mesh)) @ J
    M = sp.csr_matrix(M)
    # exact symmetry regardless of summation order
    M = 0.5 * (M + M.T)
    return SparseSymMatrix.from_scipy(M)


def as_field(f):
    if callable(f):
        return f
    c = float(f)
    return lambda x, y: np.full(np.broadcast(x, y).shape, c)


def assemble_load(mesh, f):
    f = as_field(f)
    pts = triangle_points(mesh.vertices, mesh.triangles, TRI6_BARY)
    fq = f(pts[..., 0], pts[..., 1])
    b = np.einsum("tq,q,qi->ti", fq, TRI6_WEIGHTS, TRI6_BARY) * mesh.areas[:, None]
    return b.ravel()


def bilinear(v, w, mode=BoundaryMode.HomogeneousDirichlet):
    """a_T(v, w) evaluated directly from weak gradients and jumps."""
    mesh = v.mesh
    gv = weak_gradient(v, mode).values
    gw = weak_gradient(w, mode).values
    vol = np.sum(mesh.coefficient * mesh.areas * np.einsum("td,td->t", gv, gw))
    stab = np.sum(stabilization_weights(mesh) * qb_jumps(v) * qb_jumps(w))
    return float(vol + stab)


def energy_norm(v, mode=BoundaryMode.HomogeneousDirichlet, M=None):
    if M is None:
        return float(np.sqrt(max(bilinear(v, v, mode), 0.0)))
    x = v.vector
    return float(np.sqrt(max(x @ M.matvec(x), 0.0)))
