"""Reference (numpy) implementations of the hot kernels.

These mirror the signatures in ``_core.pyx`` exactly and are used when the
compiled extension is unavailable or ``AMWG_PURE_PYTHON`` is set.
"""
import numpy as np


def nvb_closure(elem_edges, edge_adj, edge_marked):
    """Propagate edge marks until every element with a marked edge also has
    its refinement edge (local edge 2) marked. Modifies ``edge_marked``."""
    marked = edge_marked.view(bool)
    while True:
        need = (marked[elem_edges[:, 0]] | marked[elem_edges[:, 1]]) & ~marked[elem_edges[:, 2]]
        if not need.any():
            return edge_marked
        marked[elem_edges[need, 2]] = True


def pcg(indptr, indices, data, b, x0, dinv, tol, maxiter):
    """Preconditioned CG on a CSR matrix; ``dinv`` is the diagonal
    preconditioner (all ones for none).

    Stops when the recursively updated residual satisfies
    ``||r|| <= tol * ||b||``. Returns ``(x, iterations, status)`` with
    status 0 = converged, 1 = iteration limit, 2 = breakdown.
    """
    from scipy.sparse import csr_matrix

    n = b.shape[0]
    M = csr_matrix((data, indices, indptr), shape=(n, n))
    x = x0.copy()
    r = b - M @ x
    bnorm = np.linalg.norm(b)
    target = tol * bnorm
    if np.linalg.norm(r) <= target:
        return x, 0, 0
    z = dinv * r
    p = z.copy()
    rz = r @ z
    # a singular M drives the iterates to inf/nan; the pq guard reports it
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, maxiter + 1):
            q = M @ p
            pq = p @ q
            if not pq > 0.0:
                return x, it, 2
            alpha = rz / pq
            x += alpha * p
            r -= alpha * q
            if np.linalg.norm(r) <= target:
                return x, it, 0
            z = dinv * r
            rz_new = r @ z
            if not rz_new > 0.0:
                return x, it, 2
            p *= rz_new / rz
            p += z
            rz = rz_new
    return x, maxiter, 1
