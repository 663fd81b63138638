import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amwg import mesh as meshmod
from amwg.adapt import AdaptConfig, Mode, amwg_cycle, dorfler_mark
from amwg.verify import Problem, checkerboard, lshape, square_sine


def greedy_oracle(vals, theta):
    """Smallest prefix of the stably sorted list reaching the target."""
    order = sorted(range(len(vals)), key=lambda i: (-vals[i], i))
    target = theta * math.fsum(vals)
    for k in range(1, len(vals) + 1):
        if math.fsum(vals[i] for i in order[:k]) >= target:
            return set(order[:k])
    return set(order)


def test_dorfler_examples():
    assert dorfler_mark([4, 3, 2, 1], 0.5) == {0, 1}
    assert dorfler_mark([1, 3, 4, 2], 0.5) == {1, 2}
    assert dorfler_mark([0.5, 2.0, 1.5, 0.1], 1e-9) == {1}
    assert dorfler_mark([0.5, 0.0, 1.5, 0.1], 0.999999) == {0, 2, 3}
    assert dorfler_mark([1.0, 1.0, 1.0], 0.5) == {0, 1}
    assert dorfler_mark(np.zeros(4), 0.5) == set()


@pytest.mark.parametrize("theta", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_theta_out_of_range(theta):
    with pytest.raises(ValueError, match=r"theta must be in \(0,1\)"):
        dorfler_mark([1.0], theta)
    with pytest.raises(ValueError):
        AdaptConfig(theta=theta)


def test_negative_indicator():
    with pytest.raises(ValueError):
        dorfler_mark([1.0, -1e-3], 0.5)


@settings(max_examples=200, deadline=None)
@given(
    vals=st.lists(st.floats(0, 1e6, allow_subnormal=False), min_size=1, max_size=40),
    theta=st.floats(1e-6, 1 - 1e-6),
)
def test_dorfler_minimal(vals, theta):
    M = dorfler_mark(vals, theta)
    total = math.fsum(vals)
    if total == 0:
        assert M == set()
        return
    assert M == greedy_oracle(vals, theta)
    target = theta * total
    assert math.fsum(vals[i] for i in M) >= target
    smallest = min(M, key=lambda i: (vals[i], -i))
    assert math.fsum(vals[i] for i in M - {smallest}) < target


def test_zero_source_stops_immediately():
    prob = Problem("zero", meshmod.lshape(), 0.0)
    res = amwg_cycle(prob.mesh, prob)
    assert res.converged
    assert len(res.history) == 1
    assert res.history[0].eta_sq == 0.0
    assert not np.any(res.u.coefficients)


def test_uniform_sizes():
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(mode=Mode.UNIFORM, max_iterations=4, tol=0.0))
    assert [r.n_elements for r in res.history] == [2, 8, 32, 128]
    assert [r.n_dofs for r in res.history] == [6, 24, 96, 384]
    assert not res.converged


def test_uniform_errors_decrease():
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(mode=Mode.UNIFORM, max_iterations=5, tol=0.0))
    errs = [r.energy_error for r in res.history]
    assert all(b < a for a, b in zip(errs[1:], errs[2:]))


def test_tolerance_reached():
    prob = square_sine()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(tol=5.0, max_iterations=30))
    assert res.converged
    assert math.sqrt(res.history[-1].eta_sq) < 5.0
    assert all(math.sqrt(r.eta_sq) >= 5.0 for r in res.history[:-1])


def check_history(history):
    n = [r.n_elements for r in history]
    assert all(b > a for a, b in zip(n, n[1:]))
    eta = [r.eta_sq for r in history]
    dec = sum(b < a for a, b in zip(eta, eta[1:]))
    assert dec >= 0.9 * (len(eta) - 1)
    comp = [r.eta_sq + r.F for r in history]
    assert sum(b > a for a, b in zip(comp, comp[1:])) <= 1


@pytest.mark.parametrize("prob", [lshape(), checkerboard(100.0), square_sine()], ids=lambda p: p.name)
def test_adaptive_history(prob):
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(theta=0.3, max_iterations=15))
    assert len(res.history) == 15
    check_history(res.history)
    assert all(r.marked_count >= 1 for r in res.history[:-1])
    assert res.history[-1].marked_count == 0


def test_keep_iterates_links_refinements():
    prob = lshape()
    res = amwg_cycle(prob.mesh, prob, AdaptConfig(max_iterations=4, keep_iterates=True))
    assert len(res.iterates) == 4
    for cur, nxt in zip(res.iterates, res.iterates[1:]):
        assert cur.refine.fine_mesh is nxt.mesh
    assert res.iterates[-1].refine is None
