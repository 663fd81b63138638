"""Doerfler marking and the SOLVE-ESTIMATE-MARK-REFINE loop."""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import estimate
from .linsolve import CgConfig, CgResult, cg_solve
from .mesh import bisect, refine_uniform
from .mwg import DgFunction, assemble_load, assemble_system

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    ADAPTIVE = "adaptive"
    UNIFORM = "uniform"


def _check_theta(theta):
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must be in (0,1)")


@dataclass(frozen=True)
class AdaptConfig:
    theta: float = 0.3
    tol: float = 1e-3
    max_iterations: int = 40
    mode: Mode = Mode.ADAPTIVE
    cg: CgConfig = CgConfig()
    keep_iterates: bool = False

    def __post_init__(self):
        _check_theta(self.theta)
        if not self.tol >= 0:
            raise ValueError("tol must be nonnegative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class AdaptRecord:
    iteration: int
    n_elements: int
    n_dofs: int
    eta_sq: float
    F: float
    jump_sq: float
    energy_error: float = None
    marked_count: int = 0
    cg_iterations: int = 0


@dataclass
class Iterate:
    mesh: object
    u: DgFunction
    breakdown: object
    refine: object = None  # RefineResult leading to the next iterate


@dataclass
class AdaptResult:
    u: DgFunction
    mesh: object
    history: list
    converged: bool
    iterates: list = field(default_factory=list)


def dorfler_mark(indicators, theta):
    """Minimum-cardinality set carrying a ``theta`` share of the total.

    Indicators are taken in descending order (lower element id first on
    ties), so the returned set is unique.
    """
    _check_theta(theta)
    eta = np.asarray(indicators, dtype=float)
    if np.any(eta < 0):
        raise ValueError("indicators must be nonnegative")
    total = math.fsum(eta)
    if total == 0.0:
        return set()
    order = np.lexsort((np.arange(eta.size), -eta))
    target = theta * total
    csum = np.cumsum(eta[order])
    k = min(int(np.searchsorted(csum, target, side="left")) + 1, eta.size)
    # settle rounding in the prefix sums against a compensated sum
    while k < eta.size and math.fsum(eta[order[:k]]) < target:
        k += 1
    while k > 1 and math.fsum(eta[order[: k - 1]]) >= target:
        k -= 1
    return set(order[:k].tolist())


def solve(mesh, f, cg=CgConfig()):
    """Assemble and solve on ``mesh``; returns (DgFunction, CgResult)."""
    M = assemble_system(mesh)
    b = assemble_load(mesh, f)
    if not np.any(b):
        return DgFunction.from_vector(mesh, np.zeros_like(b)), CgResult(np.zeros_like(b), 0, 0.0)
    res = cg_solve(M, b, cg)
    return DgFunction.from_vector(mesh, res.x), res


def amwg_cycle(mesh0, problem, cfg=AdaptConfig()):
    """Run the adaptive loop from ``mesh0`` until ``eta < tol``.

    Stops after ``cfg.max_iterations`` SOLVE/ESTIMATE steps otherwise, with
    ``converged=False`` and the history intact.
    """
    from .verify import energy_error

    mesh = mesh0
    history, iterates = [], []
    for k in range(cfg.max_iterations):
        u, cg = solve(mesh, problem.f, cfg.cg)
        br = estimate(u, problem.f)
        err = energy_error(u, problem).energy_error if problem.exact is not None else None
        rec = AdaptRecord(
            iteration=k,
            n_elements=mesh.n_elements,
            n_dofs=3 * mesh.n_elements,
            eta_sq=br.eta_sq_total,
            F=br.F_total,
            jump_sq=br.jump_sq_total,
            energy_error=err,
            cg_iterations=cg.iterations,
        )
        history.append(rec)
        it = Iterate(mesh, u, br)
        if cfg.keep_iterates:
            iterates.append(it)
        log.info("iter %d: %d elements, eta=%.4e", k, mesh.n_elements, br.eta)
        if br.eta < cfg.tol:
            return AdaptResult(u, mesh, history, True, iterates)
        if k == cfg.max_iterations - 1:
            break
        if cfg.mode is Mode.UNIFORM:
            rec.marked_count = mesh.n_elements
            ref = refine_uniform(mesh)
        else:
            marked = dorfler_mark(br.eta_sq, cfg.theta)
            rec.marked_count = len(marked)
            ref = bisect(mesh, marked)
        it.refine = ref
        mesh = ref.fine_mesh
    return AdaptResult(u, mesh, history, False, iterates)
