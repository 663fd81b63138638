"""Adaptive lowest-order modified weak Galerkin (mWG) solver for
``-div(A grad u) = f`` on 2D triangulations with homogeneous Dirichlet data."""
from ._kernels import BACKEND
from .adapt import AdaptConfig, AdaptRecord, AdaptResult, Mode, amwg_cycle, dorfler_mark
from .crbridge import CrFunction, cr_gradient, cr_interpolate, verify_identity
from .estimator import EstimatorBreakdown, estimate, global_estimator
from .linsolve import CgConfig, cg_solve
from .mesh import Mesh, MeshError, RefineResult, bisect, build_initial, h_of, read_mesh, write_mesh
from .mwg import (
    BoundaryMode,
    DgFunction,
    SparseSymMatrix,
    WeakGradientField,
    assemble_load,
    assemble_system,
    energy_norm,
    weak_gradient,
)
from .verify import ErrorReport, Problem, energy_error, lemma_suite

__version__ = "0.1.0"
