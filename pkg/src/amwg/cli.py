"""Batch front-end: ``amwg run <config-file> [--verify] [--mesh-out DIR]``.

The config file is line oriented ``key = value``; blank lines and lines
starting with ``#`` are ignored. Exit status is 0 when the tolerance was
reached, 2 when the iteration limit was hit and 1 on any error.
"""
import argparse
import ast
import csv
import logging
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import mesh as meshmod
from .adapt import AdaptConfig, Mode, amwg_cycle
from .verify import Problem, builtin, lemma_suite

log = logging.getLogger(__name__)

CSV_HEADER = ["iter", "nelem", "ndofs", "eta2", "F", "jump2", "err_energy", "marked"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = None
    theta: float = 0.3
    tol: float = 1e-3
    max_iterations: int = 40
    mode: str = "adaptive"
    output: str = "history.csv"
    coefficient_K: float = 100.0
    f: str = "1"

    def validate(self):
        if self.problem is None:
            raise ConfigError("missing key: problem")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError("theta must be in (0,1)")
        if not self.tol >= 0.0:
            raise ConfigError("tol must be nonnegative")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.mode not in ("adaptive", "uniform"):
            raise ConfigError(f"mode must be adaptive or uniform, got {self.mode!r}")
        if not self.coefficient_K > 0:
            raise ConfigError("coefficient_K must be positive")
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"malformed line {lineno}: {raw!r}")
        if key not in _TYPES:
            raise ConfigError(f"unknown key: {key}")
        kind = _TYPES[key]
        try:
            if kind is int:
                values[key] = int(value)
            elif kind is float:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise ConfigError(f"unparsable number for {key}: {value}") from None
    return RunConfig(**values).validate()


_FUNCS = {name: getattr(np, name) for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "arctan2")}


def source_expression(expr):
    """Compile an ``f(x, y)`` expression using numpy math functions only."""
    tree = ast.parse(expr, mode="eval")
    allowed = set(_FUNCS) | {"x", "y", "pi"}
    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ConfigError(f"unknown name in f: {node.id}")
        if isinstance(node, (ast.Attribute, ast.Subscript, ast.Lambda)):
            raise ConfigError(f"unsupported syntax in f: {expr}")
    code = compile(tree, "<f>", "eval")

    def f(x, y):
        val = eval(code, {"__builtins__": {}}, dict(_FUNCS, x=x, y=y, pi=np.pi))
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast(x, y).shape)

    return f


def make_problem(cfg):
    try:
        return builtin(cfg.problem, cfg.coefficient_K)
    except KeyError:
        pass
    if not os.path.isfile(cfg.problem):
        raise ConfigError(f"unknown problem: {cfg.problem}")
    mesh = meshmod.read_mesh(cfg.problem)
    return Problem(os.path.basename(cfg.problem), mesh, source_expression(cfg.f))


def _fmt(v):
    return "" if v is None else f"{v:.17g}"


def write_history(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in history:
            w.writerow(
                [r.iteration, r.n_elements, r.n_dofs, _fmt(r.eta_sq), _fmt(r.F), _fmt(r.jump_sq),
                 _fmt(r.energy_error), r.marked_count]
            )


def run(config_path, verify=False, mesh_out=None, out=None):
    """Execute one experiment; returns the process exit status."""
    out = sys.stdout if out is None else out
    try:
        with open(config_path) as fh:
            cfg = parse_config(fh.read())
        problem = make_problem(cfg)
        acfg = AdaptConfig(
            theta=cfg.theta,
            tol=cfg.tol,
            max_iterations=cfg.max_iterations,
            mode=Mode(cfg.mode),
            keep_iterates=verify,
        )
        result = amwg_cycle(problem.mesh, problem, acfg)
        write_history(result.history, cfg.output)
        if mesh_out:
            os.makedirs(mesh_out, exist_ok=True)
            meshmod.write_mesh(result.mesh, os.path.join(mesh_out, "final_mesh.txt"))
        if verify:
            print(lemma_suite(result, problem).format(), file=out)
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        log.debug("run failed", exc_info=True)
        return 1
    return 0 if result.converged else 2


def main(argv=None):
    parser = argparse.ArgumentParser(prog="amwg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment described by a config file")
    p.add_argument("config")
    p.add_argument("--verify", action="store_true", help="run the lemma suite after the cycle")
    p.add_argument("--mesh-out", metavar="DIR", help="write the final mesh to DIR/final_mesh.txt")
    p.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return run(args.config, verify=args.verify, mesh_out=args.mesh_out)


if __name__ == "__main__":
    sys.exit(main())
