import numpy as np
import pytest

from amwg import mesh as meshmod
from amwg.crbridge import CrFunction, cr_gradient, cr_interpolate, cr_to_dg, verify_identity
from amwg.mwg import DgFunction, qb_averages, weak_gradient

from conftest import builtin_meshes, refined


def edge_by_endpoints(mesh, p, q):
    want = {tuple(map(float, p)), tuple(map(float, q))}
    for e in range(mesh.n_edges):
        if {tuple(mesh.vertices[i]) for i in mesh.edge_vertices[e]} == want:
            return e
    raise LookupError((p, q))


def corrupted_identity(v):
    """Identity check against a weak gradient with one edge sign flipped."""
    mesh = v.mesh
    g = np.where(mesh.is_boundary, 0.0, qb_averages(v))
    ee = mesh.elem_edges
    sign = mesh.elem_edge_sign.copy()
    sign[:, 0] *= -1
    flux = (mesh.lengths[ee] * g[ee] * sign)[..., None] * mesh.normals[ee]
    bad = flux.sum(axis=1) / mesh.areas[:, None]
    good = cr_gradient(cr_interpolate(v)).values
    return float(np.max(np.linalg.norm(bad - good, axis=1)))


def test_interpolate_constant_on_square(square):
    w = cr_interpolate(DgFunction(square, np.ones((2, 3))))
    diag = int(np.flatnonzero(~square.is_boundary)[0])
    assert w.edge_values[diag] == 1.0
    assert not np.any(w.edge_values[square.is_boundary])


def test_cr_gradient_examples(unit_triangle, square):
    m = unit_triangle
    vals = np.zeros(3)
    vals[edge_by_endpoints(m, (1, 0), (0, 1))] = 1.0
    assert np.allclose(cr_gradient(CrFunction(m, vals)).values[0], [2, 2], atol=1e-14)
    const = cr_gradient(CrFunction(m, np.full(3, 0.7))).values
    assert np.allclose(const, 0.0, atol=1e-14)
    vals = np.zeros(5)
    vals[edge_by_endpoints(square, (0, 0), (1, 1))] = 1.0
    t1 = [t for t in range(2) if 1 in square.triangles[t]][0]  # contains (1, 0)
    assert np.allclose(cr_gradient(CrFunction(square, vals)).values[t1], [-2, 2], atol=1e-14)


def test_identity_on_square_by_hand(square):
    v = DgFunction(square, np.ones((2, 3)))
    assert verify_identity(v) == 0.0
    assert np.allclose(weak_gradient(v).values, cr_gradient(cr_interpolate(v)).values, atol=0)


@pytest.mark.parametrize("name", ["square", "lshape", "checkerboard"])
def test_identity_random(name, rng):
    mesh = refined(builtin_meshes()[name], 3, rng)
    for _ in range(50):
        v = DgFunction(mesh, rng.uniform(-1, 1, (mesh.n_elements, 3)))
        assert verify_identity(v) <= 1e-12 * (1 + np.abs(v.coefficients).max())


def test_conforming_input(rng):
    mesh = refined(meshmod.lshape(), 3, rng)
    nodal = np.zeros(mesh.n_vertices)
    inner = mesh.interior_vertices()
    nodal[inner] = rng.standard_normal(inner.size)
    v = DgFunction.from_nodal(mesh, nodal)
    back = cr_to_dg(cr_interpolate(v))
    assert np.allclose(back.coefficients, v.coefficients, atol=1e-12)
    assert np.allclose(cr_gradient(cr_interpolate(v)).values, v.local_gradients(), atol=1e-11)


def test_projection_on_cr_space(rng):
    mesh = refined(meshmod.checkerboard(), 3, rng)
    vals = rng.standard_normal(mesh.n_edges)
    vals[mesh.is_boundary] = 0.0
    w = CrFunction(mesh, vals)
    assert np.allclose(cr_interpolate(cr_to_dg(w)).edge_values, vals, atol=1e-12)


def test_edge_mean_reproduction(rng):
    mesh = refined(meshmod.lshape(), 3, rng)
    v = DgFunction(mesh, rng.standard_normal((mesh.n_elements, 3)))
    dg = cr_to_dg(cr_interpolate(v))
    avg = qb_averages(v)
    c = dg.coefficients
    for t in range(mesh.n_elements):
        for j, e in enumerate(mesh.elem_edges[t]):
            if mesh.is_boundary[e]:
                continue
            integral = mesh.lengths[e] * 0.5 * (c[t, (j + 1) % 3] + c[t, (j + 2) % 3])
            assert integral == pytest.approx(mesh.lengths[e] * avg[e], rel=1e-13, abs=1e-13)


def test_mutation_is_detected(rng):
    mesh = refined(meshmod.lshape(), 2, rng)
    v = DgFunction(mesh, rng.uniform(-1, 1, (mesh.n_elements, 3)))
    assert corrupted_identity(v) > 1e-2
