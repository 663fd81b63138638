"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``AMWG_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

import numpy as np

from . import _pure

if os.environ.get("AMWG_PURE_PYTHON", "") not in ("", "0"):
    _core = None
else:
    try:
        from . import _core
    except ImportError:  # extension not built
        _core = None

BACKEND = "cython" if _core is not None else "python"


def nvb_closure(elem_edges, edge_adj, edge_marked, backend=None):
    impl = _pick(backend)
    elem_edges = np.ascontiguousarray(elem_edges, dtype=np.int_)
    edge_adj = np.ascontiguousarray(edge_adj, dtype=np.int_)
    edge_marked = np.ascontiguousarray(edge_marked, dtype=np.uint8)
    return impl.nvb_closure(elem_edges, edge_adj, edge_marked).astype(bool)


def pcg(indptr, indices, data, b, x0, dinv, tol, maxiter, backend=None):
    impl = _pick(backend)
    return impl.pcg(
        np.ascontiguousarray(indptr, dtype=np.intc),
        np.ascontiguousarray(indices, dtype=np.intc),
        np.ascontiguousarray(data, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(x0, dtype=np.float64),
        np.ascontiguousarray(dinv, dtype=np.float64),
        float(tol),
        int(maxiter),
    )


def _pick(backend):
    if backend is None:
        backend = BACKEND
    if backend == "cython":
        if _core is None:
            raise RuntimeError("compiled kernels are not available")
        return _core
    if backend == "python":
        return _pure
    raise ValueError(f"unknown backend: {backend!r}")
