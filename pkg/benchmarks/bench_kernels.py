"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--quick]

Times the Jacobi-PCG solve and the bisection closure on adaptively refined
L-shape meshes, then one full adaptive run per backend.
"""
import argparse
import time

import numpy as np

from amwg import _kernels
from amwg import mesh as meshmod
from amwg.adapt import AdaptConfig, amwg_cycle, dorfler_mark, solve
from amwg.estimator import estimate
from amwg.mwg import assemble_load, assemble_system
from amwg.verify import lshape


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def adaptive_meshes(sizes):
    mesh, out = meshmod.lshape(), []
    for target in sizes:
        while mesh.n_elements < target:
            u, _ = solve(mesh, 1.0)
            mesh = meshmod.bisect(mesh, dorfler_mark(estimate(u, 1.0).eta_sq, 0.3)).fine_mesh
        out.append(mesh)
    return out


def closure_inputs(mesh, rng):
    marked = np.zeros(mesh.n_edges, dtype=np.uint8)
    chosen = rng.choice(mesh.n_elements, mesh.n_elements // 10, replace=False)
    marked[mesh.elem_edges[chosen, 2]] = 1
    return mesh.elem_edges, mesh.edge_adj, marked


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    if _kernels.BACKEND != "cython":
        print("compiled kernels not built; only the python backend is available")
    backends = ["cython", "python"] if _kernels.BACKEND == "cython" else ["python"]
    sizes = [1000, 4000] if args.quick else [1000, 4000, 16000, 40000]
    repeat = 2 if args.quick else 3
    rng = np.random.default_rng(0)

    print(f"{'kernel':<10}{'elements':>10}" + "".join(f"{b + ' [ms]':>14}" for b in backends) + f"{'ratio':>9}")
    for mesh in adaptive_meshes(sizes):
        M = assemble_system(mesh)
        b = assemble_load(mesh, 1.0)
        dinv = 1.0 / M.diagonal()
        x0 = np.zeros_like(b)
        row = []
        for name in backends:
            t, (_, its, _) = best_of(
                lambda: _kernels.pcg(M.indptr, M.indices, M.data, b, x0, dinv, 1e-10, 10 * b.size, backend=name),
                repeat,
            )
            row.append(t)
        ratio = row[-1] / row[0] if len(row) > 1 else 1.0
        print(f"{'pcg':<10}{mesh.n_elements:>10}" + "".join(f"{1e3 * t:>14.3f}" for t in row) + f"{ratio:>9.2f}"
              f"   ({its} iterations)")
        ins = closure_inputs(mesh, rng)
        row = [best_of(lambda: _kernels.nvb_closure(*ins, backend=name), repeat)[0] for name in backends]
        ratio = row[-1] / row[0] if len(row) > 1 else 1.0
        print(f"{'closure':<10}{mesh.n_elements:>10}" + "".join(f"{1e3 * t:>14.3f}" for t in row) + f"{ratio:>9.2f}")

    # end to end: swap the default backend for the whole adaptive loop
    prob = lshape()
    iters = 20 if args.quick else 35
    for name in backends:
        _kernels.BACKEND = name
        t0 = time.perf_counter()
        res = amwg_cycle(prob.mesh, prob, AdaptConfig(theta=0.3, max_iterations=iters))
        print(f"end-to-end lshape, {iters} iterations, {name}: {time.perf_counter() - t0:.2f}s "
              f"({res.mesh.n_elements} elements)")


if __name__ == "__main__":
    main()
