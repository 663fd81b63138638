"""Conforming triangulations with newest-vertex bisection.

Triangles are stored counter-clockwise with the newest vertex in slot 2, so
the refinement edge is always local edge 2 (vertices 0 and 1). Local edge
``j`` is the edge opposite local vertex ``j``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    index: int
    endpoints: tuple
    n_e: np.ndarray
    t_e: np.ndarray
    length: float
    adj: tuple
    is_boundary: bool


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation plus derived edge topology.

    ``edge_adj[e] = (t0, t1)`` with ``t0 < t1``; ``t1 = -1`` on the boundary.
    ``normals[e]`` points from ``t0`` into ``t1`` (outward on the boundary)
    and ``tangents[e]`` is the normal rotated by -pi/2.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    coefficient: np.ndarray
    generation: np.ndarray
    edge_vertices: np.ndarray = field(repr=False)
    edge_adj: np.ndarray = field(repr=False)
    elem_edges: np.ndarray = field(repr=False)

    @property
    def n_elements(self):
        return self.triangles.shape[0]

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_edges(self):
        return self.edge_vertices.shape[0]

    @cached_property
    def areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def h(self):
        """Element size ``|tau|**(1/2)``; halves in square under bisection."""
        return np.sqrt(self.areas)

    @cached_property
    def is_boundary(self):
        return self.edge_adj[:, 1] < 0

    @cached_property
    def lengths(self):
        d = self.vertices[self.edge_vertices[:, 1]] - self.vertices[self.edge_vertices[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def normals(self):
        d = self.vertices[self.edge_vertices[:, 1]] - self.vertices[self.edge_vertices[:, 0]]
        return np.column_stack([d[:, 1], -d[:, 0]]) / self.lengths[:, None]

    @cached_property
    def tangents(self):
        n = self.normals
        return np.column_stack([n[:, 1], -n[:, 0]])

    @cached_property
    def elem_edge_sign(self):
        """+1 where the global edge normal is outward for the element."""
        owner = self.edge_adj[self.elem_edges, 0]
        return np.where(owner == np.arange(self.n_elements)[:, None], 1.0, -1.0)

    @cached_property
    def midpoints(self):
        return 0.5 * (self.vertices[self.edge_vertices[:, 0]] + self.vertices[self.edge_vertices[:, 1]])

    def edge(self, e):
        a, b = self.edge_adj[e]
        return Edge(
            index=int(e),
            endpoints=(int(self.edge_vertices[e, 0]), int(self.edge_vertices[e, 1])),
            n_e=self.normals[e].copy(),
            t_e=self.tangents[e].copy(),
            length=float(self.lengths[e]),
            adj=(int(a),) if b < 0 else (int(a), int(b)),
            is_boundary=bool(b < 0),
        )

    def edges(self):
        return [self.edge(e) for e in range(self.n_edges)]

    def interior_vertices(self):
        on_boundary = np.zeros(self.n_vertices, dtype=bool)
        on_boundary[self.edge_vertices[self.is_boundary].ravel()] = True
        return np.flatnonzero(~on_boundary)

    def min_angle(self):
        p = self.vertices[self.triangles]
        angles = []
        for j in range(3):
            u = p[:, (j + 1) % 3] - p[:, j]
            v = p[:, (j + 2) % 3] - p[:, j]
            c = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.arccos(np.clip(c, -1.0, 1.0)))
        return float(np.min(angles))


def h_of(mesh, tau):
    return float(mesh.h[tau])


def _make_mesh(vertices, triangles, coefficient, generation):
    """Build the edge table for already oriented, conforming input."""
    nt = triangles.shape[0]
    nv = vertices.shape[0]
    # half-edge j of triangle t runs from local vertex j+1 to j+2 (CCW)
    start = triangles[:, [1, 2, 0]].ravel()
    end = triangles[:, [2, 0, 1]].ravel()
    owner = np.repeat(np.arange(nt), 3)
    key = np.minimum(start, end).astype(np.int64) * nv + np.maximum(start, end)
    order = np.lexsort((owner, key))
    skey = key[order]
    first = np.ones(skey.shape[0], dtype=bool)
    first[1:] = skey[1:] != skey[:-1]
    edge_of_sorted = np.cumsum(first) - 1
    ne = int(edge_of_sorted[-1]) + 1
    counts = np.bincount(edge_of_sorted, minlength=ne)
    if counts.max() > 2:
        raise MeshError("non-conforming: an edge is shared by more than two triangles")

    elem_edges = np.empty(3 * nt, dtype=np.int_)
    elem_edges[order] = edge_of_sorted
    elem_edges = elem_edges.reshape(nt, 3)

    head = order[first]
    edge_adj = np.full((ne, 2), -1, dtype=np.int_)
    edge_adj[:, 0] = owner[head]
    second = order[~first]
    edge_adj[edge_of_sorted[~first], 1] = owner[second]
    if np.any(owner[second] == edge_adj[edge_of_sorted[~first], 0]):
        raise MeshError("degenerate triangle: repeated vertex")
    edge_vertices = np.column_stack([start[head], end[head]])
    shared = edge_of_sorted[~first]
    if np.any(start[second] != edge_vertices[shared, 1]):
        raise MeshError("non-conforming: overlapping triangles share an edge")
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        coefficient=coefficient,
        generation=generation,
        edge_vertices=edge_vertices,
        edge_adj=edge_adj,
        elem_edges=elem_edges,
    )


def build_initial(vertices, triangle_list, coefficient_per_triangle=1.0):
    """Create a mesh from raw input, checking conformity.

    Triangles are reoriented counter-clockwise and rotated so that the
    vertex opposite the longest edge sits in the newest-vertex slot (ties go
    to the lowest vertex index).
    """
    vertices = np.array(vertices, dtype=float).reshape(-1, 2)
    tris = np.array(triangle_list, dtype=np.int_).reshape(-1, 3)
    nt = tris.shape[0]
    if nt == 0:
        raise MeshError("empty triangle list")
    if tris.min() < 0 or tris.max() >= vertices.shape[0]:
        raise MeshError("triangle references a vertex index out of range")
    coeff = np.broadcast_to(np.asarray(coefficient_per_triangle, dtype=float), (nt,)).copy()
    if np.any(~(coeff > 0)):
        raise MeshError("coefficient must be positive on every triangle")

    p = vertices[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    scale = np.maximum(np.einsum("ij,ij->i", d1, d1), np.einsum("ij,ij->i", d2, d2))
    if np.any(np.abs(cross) <= 1e-14 * scale):
        raise MeshError("degenerate (zero-area) triangle")
    tris = np.where((cross < 0)[:, None], tris[:, [0, 2, 1]], tris)

    # newest vertex = vertex opposite the longest edge
    p = vertices[tris]
    sq = np.stack(
        [np.sum((p[:, (j + 2) % 3] - p[:, (j + 1) % 3]) ** 2, axis=1) for j in range(3)], axis=1
    )
    longest = sq >= sq.max(axis=1, keepdims=True) * (1.0 - 1e-12)
    cand = np.where(longest, tris, np.iinfo(np.int_).max)
    newest = np.argmin(cand, axis=1)
    rot = np.stack([(newest + 1) % 3, (newest + 2) % 3, newest], axis=1)
    tris = np.take_along_axis(tris, rot, axis=1)

    mesh = _make_mesh(vertices, np.ascontiguousarray(tris), coeff, np.zeros(nt, dtype=np.int_))
    _check_hanging_nodes(mesh)
    return mesh


def _check_hanging_nodes(mesh):
    bnd = np.flatnonzero(mesh.is_boundary)
    used = np.unique(mesh.triangles)
    x = mesh.vertices[used]
    for e in bnd:
        a, b = mesh.vertices[mesh.edge_vertices[e]]
        d = b - a
        L2 = d @ d
        rel = x - a
        t = rel @ d / L2
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / np.sqrt(L2)
        inside = (t > 1e-12) & (t < 1 - 1e-12) & (dist <= 1e-12 * np.sqrt(L2))
        if inside.any():
            raise MeshError("non-conforming: hanging node on an edge")


@dataclass(frozen=True)
class RefineResult:
    fine_mesh: Mesh
    refined_set: frozenset
    parent_of: np.ndarray


def bisect(mesh, marked, backend=None):
    """Newest-vertex bisection of ``marked`` with conformity closure.

    Every element whose refinement edge is marked is bisected; a child is
    bisected again when its own refinement edge (an edge of the parent) is
    marked, so each call deepens any element by at most two generations.
    """
    marked = np.asarray(sorted(marked), dtype=np.int_)
    nt = mesh.n_elements
    if marked.size and (marked[0] < 0 or marked[-1] >= nt):
        raise IndexError("marked element id out of range")

    edge_marked = np.zeros(mesh.n_edges, dtype=np.uint8)
    edge_marked[mesh.elem_edges[marked, 2]] = 1
    edge_marked = _kernels.nvb_closure(mesh.elem_edges, mesh.edge_adj, edge_marked, backend=backend)

    if not edge_marked.any():
        return RefineResult(mesh, frozenset(), np.arange(nt))

    nv = mesh.n_vertices
    new_id = np.full(mesh.n_edges, -1, dtype=np.int_)
    new_id[edge_marked] = nv + np.arange(int(edge_marked.sum()))
    vertices = np.vstack([mesh.vertices, mesh.midpoints[edge_marked]])

    T = mesh.triangles
    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    ee = mesh.elem_edges
    split = edge_marked[ee[:, 2]]
    left = edge_marked[ee[:, 1]]  # edge (c, a)
    right = edge_marked[ee[:, 0]]  # edge (b, c)
    m = new_id[ee[:, 2]]
    p1 = new_id[ee[:, 1]]
    p0 = new_id[ee[:, 0]]

    slots = np.empty((nt, 4, 3), dtype=np.int_)
    slots[:, 0] = np.where(
        split[:, None],
        np.where(left[:, None], np.column_stack([m, c, p1]), np.column_stack([c, a, m])),
        T,
    )
    slots[:, 1] = np.column_stack([a, m, p1])
    slots[:, 2] = np.where(right[:, None], np.column_stack([m, b, p0]), np.column_stack([b, c, m]))
    slots[:, 3] = np.column_stack([c, m, p0])
    keep = np.column_stack([np.ones(nt, bool), split & left, split, split & right])

    gen = mesh.generation[:, None] + np.column_stack(
        [split.astype(int) + (split & left), np.full(nt, 2), 1 + right.astype(int), np.full(nt, 2)]
    )
    parent = np.repeat(np.arange(nt), 4).reshape(nt, 4)
    flat = keep.ravel()
    triangles = np.ascontiguousarray(slots.reshape(-1, 3)[flat])
    parent_of = parent.ravel()[flat]
    fine = _make_mesh(
        vertices,
        triangles,
        mesh.coefficient[parent_of],
        gen.ravel()[flat],
    )
    return RefineResult(fine, frozenset(np.flatnonzero(split).tolist()), parent_of)


def refine_uniform(mesh, backend=None):
    """Two full bisection sweeps (every element split into four)."""
    r1 = bisect(mesh, range(mesh.n_elements), backend=backend)
    r2 = bisect(r1.fine_mesh, range(r1.fine_mesh.n_elements), backend=backend)
    return RefineResult(r2.fine_mesh, r1.refined_set, r1.parent_of[r2.parent_of])


# ---------------------------------------------------------------------------
# builtin initial meshes and the text format


def unit_square():
    return build_initial([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])


def lshape():
    """(-1,1)^2 minus [0,1)x(-1,0): six triangles fanned around (-1/2, 1/2)."""
    corners = [(-1, -1), (0, -1), (0, 0), (1, 0), (1, 1), (-1, 1)]
    verts = corners + [(-0.5, 0.5)]
    tris = [(i, (i + 1) % 6, 6) for i in range(6)]
    return build_initial(verts, tris)


def checkerboard(K=100.0):
    """Unit square in four quadrants, coefficient K on the off-diagonal ones."""
    verts = [(x, y) for y in (0, 0.5, 1) for x in (0, 0.5, 1)]
    tris, coeff = [], []
    for qy in range(2):
        for qx in range(2):
            v0 = 3 * qy + qx
            A = 1.0 if qx == qy else K
            tris += [(v0, v0 + 1, v0 + 4), (v0, v0 + 4, v0 + 3)]
            coeff += [A, A]
    return build_initial(verts, tris, coeff)


def read_mesh(path):
    with open(path) as fh:
        tokens = fh.read().split()
    try:
        nv, nt = int(tokens[0]), int(tokens[1])
        vals = tokens[2:]
        if len(vals) != 2 * nv + 4 * nt:
            raise MeshError(f"{path}: expected {2 * nv + 4 * nt} values after header, got {len(vals)}")
        xy = np.array(vals[: 2 * nv], dtype=float).reshape(nv, 2)
        rows = np.array(vals[2 * nv :], dtype=float).reshape(nt, 4)
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed mesh file ({exc})") from None
    tris = rows[:, :3]
    if np.any(tris != np.round(tris)):
        raise MeshError(f"{path}: vertex indices must be integers")
    return build_initial(xy, tris.astype(np.int_), rows[:, 3])


def write_mesh(mesh, path):
    lines = [f"{mesh.n_vertices} {mesh.n_elements}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k} {a:.17g}" for (i, j, k), a in zip(mesh.triangles, mesh.coefficient)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
