"""Conjugate gradients for the SPD mWG system."""
import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class MaxIterationsExceeded(SolverError):
    pass


class Breakdown(SolverError):
    """Non-positive curvature: the matrix is singular or indefinite."""


class DimensionMismatch(ValueError):
    pass


class Preconditioner(enum.Enum):
    NONE = "none"
    JACOBI = "jacobi"


@dataclass(frozen=True)
class CgConfig:
    rel_tolerance: float = 1e-10
    max_iterations: int = None  # default 10 * dimension
    preconditioner: Preconditioner = Preconditioner.JACOBI

    def __post_init__(self):
        if not 0.0 < self.rel_tolerance < 1.0:
            raise ValueError("rel_tolerance must be in (0,1)")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    residual: float


def cg_solve(M, b, cfg=CgConfig(), x0=None, backend=None):
    """Solve ``M x = b``; guarantees ``||b - M x|| <= rel_tolerance * ||b||``.

    Returns a :class:`CgResult`. The recursive residual used for stopping
    can drift from the true one, so the true residual is checked at the end
    and iteration resumes from the current iterate if it fails.
    """
    b = np.asarray(b, dtype=float)
    n = M.dim
    if b.shape != (n,):
        raise DimensionMismatch(f"rhs has shape {b.shape}, matrix has dimension {n}")
    maxiter = cfg.max_iterations or 10 * n
    if cfg.preconditioner is Preconditioner.JACOBI:
        d = M.diagonal()
        if np.any(~(d > 0)):
            raise Breakdown("Jacobi preconditioner needs a positive diagonal")
        dinv = 1.0 / d
    else:
        dinv = np.ones(n)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    target = cfg.rel_tolerance * bnorm
    A = M.to_scipy()
    total = 0
    tol = cfg.rel_tolerance
    while True:
        x, its, status = _kernels.pcg(M.indptr, M.indices, M.data, b, x, dinv, tol, maxiter - total, backend)
        total += its
        if status == 2:
            raise Breakdown(f"CG breakdown after {total} iterations")
        res = np.linalg.norm(b - A @ x)
        if res <= target:
            log.debug("cg converged in %d iterations, residual %.3e", total, res)
            return CgResult(x, total, res)
        if status == 1 or total >= maxiter:
            raise MaxIterationsExceeded(f"no convergence in {maxiter} iterations (residual {res:.3e})")
        tol = tol * 0.5
