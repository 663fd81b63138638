"""Model problems, error norms against exact solutions, and the discrete
lemma checks run on a finished adaptive history."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import mesh as meshmod
from .crbridge import verify_identity
from .estimator import data_term
from .mwg import (
    DgFunction,
    as_field,
    assemble_load,
    assemble_system,
    qb_jumps,
    stabilization_weights,
    weak_gradient,
)
from .quadrature import TRI6_BARY, TRI6_WEIGHTS, edge_gauss, triangle_points

LAMBDA_2D = 1.0 - 2.0**-0.5


@dataclass
class Problem:
    name: str
    mesh: object
    f: object
    exact: tuple = None  # (u(x, y), grad_u(x, y) -> (ux, uy))
    f_affine: bool = False


def square_sine():
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)

    def f(x, y):
        return 2.0 * pi**2 * np.sin(pi * x) * np.sin(pi * y)

    return Problem("square_sine", meshmod.unit_square(), f, (u, grad))


def lshape():
    return Problem("lshape", meshmod.lshape(), 1.0, f_affine=True)


def checkerboard(K=100.0):
    return Problem("checkerboard", meshmod.checkerboard(K), 1.0, f_affine=True)


def affine_source(a=1.0, bx=1.0, by=0.0, mesh=None):
    """Quadrature-exact source ``a + bx x + by y`` on the unit square by default."""
    return Problem(
        "affine",
        meshmod.unit_square() if mesh is None else mesh,
        lambda x, y: a + bx * x + by * y,
        f_affine=True,
    )


BUILTINS = {"square_sine": square_sine, "lshape": lshape, "checkerboard": checkerboard}


def builtin(name, K=100.0):
    if name not in BUILTINS:
        raise KeyError(f"unknown problem: {name}")
    return checkerboard(K) if name == "checkerboard" else BUILTINS[name]()


@dataclass(frozen=True)
class ErrorReport:
    energy_error: float
    stab_error_sq: float

    @property
    def triple_norm_error(self):
        return float(np.sqrt(self.energy_error**2 + self.stab_error_sq))


def energy_error(u_T, problem, bary=TRI6_BARY, weights=TRI6_WEIGHTS, explicit_trace=False, edge_points=2):
    """Error of ``u_T`` in the mesh-dependent norm against the exact solution.

    Interior edges use ``Q_b[u - u_T] = -Q_b[u_T]`` since the exact solution
    has no jumps; ``explicit_trace=True`` evaluates the exact traces from both
    sides by Gauss quadrature instead (a bookkeeping check).
    """
    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    u, grad = problem.exact
    mesh = u_T.mesh
    g = weak_gradient(u_T).values
    pts = triangle_points(mesh.vertices, mesh.triangles, bary)
    ux, uy = grad(pts[..., 0], pts[..., 1])
    err2 = (ux - g[:, 0:1]) ** 2 + (uy - g[:, 1:2]) ** 2
    vol = np.sum(mesh.coefficient * mesh.areas * (err2 @ weights))

    s, w = edge_gauss(edge_points)
    a = mesh.vertices[mesh.edge_vertices[:, 0]]
    b = mesh.vertices[mesh.edge_vertices[:, 1]]
    xq = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    u_mean = u(xq[..., 0], xq[..., 1]) @ w
    jump_h = qb_jumps(u_T)
    if explicit_trace:
        # both one-sided traces of a continuous u agree pointwise
        side0 = u_mean
        side1 = np.where(mesh.is_boundary, 0.0, u(xq[..., 0], xq[..., 1]) @ w)
        jump_u = side0 - side1
    else:
        jump_u = np.where(mesh.is_boundary, u_mean, 0.0)
    stab = np.sum(stabilization_weights(mesh) * (jump_u - jump_h) ** 2)
    return ErrorReport(float(np.sqrt(vol)), float(stab))


def source_norm(mesh, f):
    pts = triangle_points(mesh.vertices, mesh.triangles, TRI6_BARY)
    fq = as_field(f)(pts[..., 0], pts[..., 1])
    return float(np.sqrt(np.sum(mesh.areas * (fq**2 @ TRI6_WEIGHTS))))


def hat_embedding(mesh):
    """DG coefficients of every interior-vertex hat function, (3*nt x n_int)."""
    inner = mesh.interior_vertices()
    col_of = np.full(mesh.n_vertices, -1)
    col_of[inner] = np.arange(inner.size)
    cols = col_of[mesh.triangles].ravel()
    rows = np.arange(3 * mesh.n_elements)
    ok = cols >= 0
    return sp.csr_matrix((np.ones(ok.sum()), (rows[ok], cols[ok])), shape=(3 * mesh.n_elements, inner.size))


def galerkin_residual(mesh, u, f, M=None, b=None):
    """``max_phi |a(u, phi) - (f, phi)| / (||f|| + |||u|||)`` over hat functions."""
    M = assemble_system(mesh) if M is None else M
    b = assemble_load(mesh, f) if b is None else b
    x = u.vector
    Mx = M.matvec(x)
    r = hat_embedding(mesh).T @ (Mx - b)
    scale = source_norm(mesh, f) + np.sqrt(max(x @ Mx, 0.0))
    return float(np.max(np.abs(r), initial=0.0) / scale) if scale > 0 else float(np.max(np.abs(r), initial=0.0))


@dataclass
class LemmaCheck:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass
class LemmaReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def format(self):
        lines = ["== lemma suite =="]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status} {c.name}: {c.value:.3e} (threshold {c.threshold:.1e})")
        lines.append("ALL PASS" if self.passed else "SOME FAILED")
        return "\n".join(lines)


def lemma_suite(result, problem, n_random=100, seed=0, identity=verify_identity):
    """Run the four discrete checks on a history with retained iterates.

    ``identity`` is injectable so mutation tests can swap in a broken
    weak gradient.
    """
    if not result.iterates:
        raise ValueError("lemma_suite needs an adaptive result run with keep_iterates=True")
    rng = np.random.default_rng(seed)
    report = LemmaReport()

    galerkin = max(galerkin_residual(it.mesh, it.u, problem.f) for it in result.iterates)
    report.checks.append(LemmaCheck("galerkin consistency", galerkin <= 1e-10, galerkin, 1e-10))

    worst = 0.0
    for it in result.iterates:
        worst = max(worst, identity(it.u))
        for _ in range(3):
            v = DgFunction(it.mesh, rng.uniform(-1, 1, (it.mesh.n_elements, 3)))
            worst = max(worst, identity(v))
    report.checks.append(LemmaCheck("weak gradient = CR gradient", worst <= 1e-12, worst, 1e-12))

    excess = -np.inf
    for k in range(len(result.iterates) - 1):
        cur, nxt = result.iterates[k], result.iterates[k + 1]
        Fk = data_term(cur.mesh, problem.f)
        Fn = data_term(nxt.mesh, problem.f)
        R = np.fromiter(cur.refine.refined_set, dtype=np.int_)
        bound = Fk.sum() - LAMBDA_2D * Fk[R].sum()
        excess = max(excess, Fn.sum() - bound)
    if np.isfinite(excess):
        report.checks.append(LemmaCheck("data-term reduction", excess <= 1e-12, excess, 1e-12))

    final = result.iterates[-1]
    M = assemble_system(final.mesh)
    V = rng.standard_normal((final.mesh.n_elements * 3, n_random))
    q = np.einsum("ij,ij->j", V, M.to_scipy() @ V)
    report.checks.append(LemmaCheck("a(v,v) > 0", bool(np.all(q > 0)), float(q.min()), 0.0))
    return report
