import math

import numpy as np
import pytest

from amwg import mesh as meshmod
from amwg.adapt import AdaptConfig, Mode, amwg_cycle
from amwg.crbridge import cr_gradient, cr_interpolate
from amwg.mwg import DgFunction, qb_averages
from amwg.quadrature import collapsed_gauss, edge_gauss
from amwg.verify import (
    Problem,
    affine_source,
    builtin,
    energy_error,
    galerkin_residual,
    lemma_suite,
    square_sine,
)

from conftest import refined


def uniform(mesh, levels):
    for _ in range(levels):
        mesh = meshmod.refine_uniform(mesh).fine_mesh
    return mesh


def hat_problem(mesh, vertex):
    """Exact solution = the P1 hat of ``vertex`` on ``mesh`` (found by point location)."""
    tri = mesh.vertices[mesh.triangles]
    grads = []
    for t in range(mesh.n_elements):
        p = tri[t]
        c = (mesh.triangles[t] == vertex).astype(float)
        grads.append(np.linalg.solve(np.c_[p, np.ones(3)], c))
    grads = np.array(grads)  # rows (gx, gy, const)

    def locate(x, y):
        pts = np.stack([np.ravel(x), np.ravel(y)], axis=1)
        out = np.full(len(pts), -1)
        for t in range(mesh.n_elements):
            a, b, c = tri[t]
            T = np.linalg.inv(np.c_[b - a, c - a])
            lam = (pts - a) @ T.T
            inside = (lam[:, 0] >= -1e-12) & (lam[:, 1] >= -1e-12) & (lam.sum(1) <= 1 + 1e-12)
            out[(out < 0) & inside] = t
        return out.reshape(np.shape(x))

    def u(x, y):
        g = grads[locate(x, y)]
        return g[..., 0] * x + g[..., 1] * y + g[..., 2]

    def grad(x, y):
        # quadrature points are interior, but point location on a shared edge
        # would be ambiguous; the gradient is only evaluated inside elements
        g = grads[locate(x, y)]
        return g[..., 0], g[..., 1]

    return Problem("hat", mesh, 0.0, (u, grad))


def test_conforming_interpolant_has_no_error(rng):
    mesh = uniform(meshmod.unit_square(), 2)
    v = int(mesh.interior_vertices()[0])
    prob = hat_problem(mesh, v)
    nodal = np.zeros(mesh.n_vertices)
    nodal[v] = 1.0
    rep = energy_error(DgFunction.from_nodal(mesh, nodal), prob)
    assert rep.energy_error <= 1e-12
    assert rep.stab_error_sq <= 1e-24


def test_zero_solution_error_closed_form():
    prob = square_sine()
    mesh = uniform(prob.mesh, 4)
    bary, w = collapsed_gauss(6)
    rep = energy_error(DgFunction(mesh, np.zeros((mesh.n_elements, 3))), prob, bary, w)
    assert rep.energy_error == pytest.approx(math.pi / math.sqrt(2), rel=1e-10)


def test_missing_exact_solution():
    with pytest.raises(ValueError):
        energy_error(DgFunction(meshmod.lshape(), np.zeros((6, 3))), builtin("lshape"))


def test_unknown_builtin():
    with pytest.raises(KeyError, match="unknown problem: nope"):
        builtin("nope")


def test_exact_solution_vanishes_on_boundary():
    u, _ = square_sine().exact
    s, _ = edge_gauss(4)
    mesh = uniform(meshmod.unit_square(), 3)
    bd = np.flatnonzero(mesh.is_boundary)
    a = mesh.vertices[mesh.edge_vertices[bd, 0]]
    b = mesh.vertices[mesh.edge_vertices[bd, 1]]
    x = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    assert np.max(np.abs(u(x[..., 0], x[..., 1]))) <= 1e-10


def solved(levels):
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(mode=Mode.UNIFORM, max_iterations=levels, tol=0.0))
    return prob, res.u


@pytest.mark.parametrize("levels", [5, 6])
def test_quadrature_doubling(levels):
    # levels 5, 6 are 512 and 2048 elements; the quadrature gap shrinks like h^4
    prob, u = solved(levels)
    lo = energy_error(u, prob)
    hi = energy_error(u, prob, *collapsed_gauss(6), edge_points=6)
    gap = abs(lo.triple_norm_error - hi.triple_norm_error) / hi.triple_norm_error
    if u.mesh.n_elements >= 2048:
        assert gap <= 1e-8
    else:
        assert gap <= 1e-6


def test_report_invariants_and_explicit_trace(rng):
    prob = square_sine()
    mesh = refined(prob.mesh, 5, rng)
    u = DgFunction(mesh, rng.standard_normal((mesh.n_elements, 3)))
    a = energy_error(u, prob)
    b = energy_error(u, prob, explicit_trace=True)
    assert a.energy_error >= 0 and a.stab_error_sq >= 0
    assert a.triple_norm_error >= a.energy_error
    assert abs(a.triple_norm_error - b.triple_norm_error) <= 1e-10


def test_galerkin_residual_small_after_solve(rng):
    from amwg.adapt import solve

    mesh = refined(meshmod.checkerboard(1e3), 5, rng)
    u, _ = solve(mesh, 1.0)
    assert galerkin_residual(mesh, u, 1.0) <= 1e-10
    # a perturbed solution is visibly non-Galerkin
    assert galerkin_residual(mesh, u * 1.01, 1.0) > 1e-5


def test_lemma_suite_square_sine(capsys):
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(tol=0.0, max_iterations=8, keep_iterates=True))
    rep = lemma_suite(res, prob)
    assert len(rep.checks) == 4
    assert rep.passed, rep.format()
    assert rep.format().splitlines()[-1] == "ALL PASS"


def test_lemma_suite_needs_iterates():
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(max_iterations=2))
    with pytest.raises(ValueError):
        lemma_suite(res, prob)


def flipped_identity(v):
    mesh = v.mesh
    g = np.where(mesh.is_boundary, 0.0, qb_averages(v))
    ee = mesh.elem_edges
    sign = mesh.elem_edge_sign.copy()
    sign[:, 1] *= -1
    flux = (mesh.lengths[ee] * g[ee] * sign)[..., None] * mesh.normals[ee]
    bad = flux.sum(axis=1) / mesh.areas[:, None]
    return float(np.max(np.linalg.norm(bad - cr_gradient(cr_interpolate(v)).values, axis=1)))


def test_lemma_suite_catches_mutation():
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(tol=0.0, max_iterations=4, keep_iterates=True))
    rep = lemma_suite(res, prob, identity=flipped_identity)
    by_name = {c.name: c for c in rep.checks}
    bad = by_name["weak gradient = CR gradient"]
    assert not bad.passed and bad.value > 0.1
    assert not rep.passed
    assert rep.format().splitlines()[-1] == "SOME FAILED"


def test_data_term_reduction_one_plus_x():
    prob = affine_source(1.0, 1.0, 0.0)
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(tol=0.0, max_iterations=4, keep_iterates=True))
    rep = lemma_suite(res, prob)
    check = {c.name: c for c in rep.checks}["data-term reduction"]
    assert check.passed and check.value <= 1e-12
