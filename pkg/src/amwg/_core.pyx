# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Signatures match ``amwg._pure``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def nvb_closure(long[:, ::1] elem_edges, long[:, ::1] edge_adj, edge_marked):
    cdef cnp.uint8_t[::1] marked = edge_marked
    cdef Py_ssize_t ne = edge_adj.shape[0]
    cdef Py_ssize_t nt = elem_edges.shape[0]
    cdef long[::1] stack = np.empty(ne + nt + 1, dtype=np.int_)
    cdef Py_ssize_t top = 0, e, k, t, ref
    for e in range(ne):
        if marked[e]:
            stack[top] = e
            top += 1
    with nogil:
        while top > 0:
            top -= 1
            e = stack[top]
            for k in range(2):
                t = edge_adj[e, k]
                if t < 0:
                    continue
                ref = elem_edges[t, 2]
                if not marked[ref]:
                    marked[ref] = 1
                    stack[top] = ref
                    top += 1
    return edge_marked


cdef inline double _spmv_dot(const int[::1] indptr, const int[::1] indices,
                            const double[::1] data, const double[::1] x,
                            double[::1] y) noexcept nogil:
    """y = A x, returning x . y in the same sweep."""
    cdef Py_ssize_t i, k
    cdef double s, acc = 0.0
    for i in range(y.shape[0]):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            s += data[k] * x[indices[k]]
        y[i] = s
        acc += x[i] * s
    return acc


def pcg(const int[::1] indptr, const int[::1] indices, const double[::1] data,
        const double[::1] b, const double[::1] x0, const double[::1] dinv,
        double tol, long maxiter):
    cdef Py_ssize_t n = b.shape[0], i
    x_arr = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_arr
    cdef double[::1] r = np.empty(n)
    cdef double[::1] p = np.empty(n)
    cdef double[::1] q = np.empty(n)
    cdef double target, rz, rz_new, rr, pq, alpha, beta, zi, bb = 0.0
    cdef long it = 0
    cdef int status = 1
    with nogil:
        _spmv_dot(indptr, indices, data, x, q)
        rr = 0.0
        rz = 0.0
        for i in range(n):
            bb += b[i] * b[i]
            r[i] = b[i] - q[i]
            rr += r[i] * r[i]
            p[i] = dinv[i] * r[i]
            rz += r[i] * p[i]
        target = tol * sqrt(bb)
        if sqrt(rr) <= target:
            status = 0
        else:
            while it < maxiter:
                it += 1
                pq = _spmv_dot(indptr, indices, data, p, q)
                if not pq > 0.0:
                    status = 2
                    break
                alpha = rz / pq
                rr = 0.0
                rz_new = 0.0
                for i in range(n):
                    x[i] += alpha * p[i]
                    r[i] -= alpha * q[i]
                    rr += r[i] * r[i]
                    rz_new += dinv[i] * r[i] * r[i]
                if sqrt(rr) <= target:
                    status = 0
                    break
                if not rz_new > 0.0:
                    status = 2
                    break
                beta = rz_new / rz
                for i in range(n):
                    p[i] = dinv[i] * r[i] + beta * p[i]
                rz = rz_new
    return x_arr, it, status
