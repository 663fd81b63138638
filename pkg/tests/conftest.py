import numpy as np
import pytest

from amwg import mesh as meshmod


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def square():
    return meshmod.unit_square()


@pytest.fixture
def unit_triangle():
    return meshmod.build_initial([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])


def random_refinements(mesh, rounds, rng, fraction=0.3):
    """Yield RefineResults from ``rounds`` random marking steps."""
    for _ in range(rounds):
        k = max(1, int(fraction * mesh.n_elements))
        marked = rng.choice(mesh.n_elements, size=k, replace=False)
        res = meshmod.bisect(mesh, set(marked.tolist()))
        yield res
        mesh = res.fine_mesh


def refined(mesh, rounds, rng):
    for res in random_refinements(mesh, rounds, rng):
        mesh = res.fine_mesh
    return mesh


def builtin_meshes():
    return {
        "square": meshmod.unit_square(),
        "lshape": meshmod.lshape(),
        "checkerboard": meshmod.checkerboard(100.0),
    }


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
