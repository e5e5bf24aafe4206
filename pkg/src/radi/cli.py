"""Command-line harness: solve from Matrix Market files, generate benchmarks, verify.

Exit codes: 0 when a solve converged (or every verify check passed),
2 when the iteration stopped at the step cap or stagnated, 1 for usage
and input errors.
"""

import argparse
import csv
import math
import os
import sys

from .cube import generate_cube
from .exceptions import RadiError
from .iteration import Arithmetic, SolveOptions, Status, solve
from .mmio import read_matrix_market, write_matrix_market
from .problem import RiccatiProblem
from .shifts import DynamicConfig, PenzlConfig, UserList
from .verify import SUITES, run_verify


class _Parser(argparse.ArgumentParser):
    # Usage problems are reported with exit code 1; code 2 is reserved for
    # non-converged solves.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="radi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ps = sub.add_parser("solve", help="run the low-rank Riccati iteration")
    ps.add_argument("--a", required=True, help="Matrix Market file for A")
    ps.add_argument("--b", help="Matrix Market file for B (omit for a Lyapunov equation)")
    ps.add_argument("--c", required=True, help="Matrix Market file for C")
    ps.add_argument("--e", help="Matrix Market file for the mass matrix E")
    ps.add_argument(
        "--shifts",
        choices=("penzl", "ham", "ham-opt", "file"),
        default="penzl",
        help="shift strategy",
    )
    ps.add_argument("--shift-file", help="text file with one 're im' shift per line")
    ps.add_argument("--ell", default="6", help="projection window in columns, or 'inf'")
    ps.add_argument("--tol", type=float, default=1e-11)
    ps.add_argument("--maxiter", type=int, default=300)
    ps.add_argument("--arithmetic", choices=("real", "complex"), default="real")
    ps.add_argument("--norm", choices=("2", "fro"), default="2")
    ps.add_argument("--history", help="write the per-iteration history CSV here")
    ps.add_argument("--seed", type=int, help="unused for file-based solves; accepted for symmetry")

    pg = sub.add_parser("gen", help="generate benchmark matrices")
    pg.add_argument("family", choices=("cube",), help="benchmark family")
    pg.add_argument("--grid", type=int, required=True, help="nodes per direction")
    pg.add_argument("--p", type=int, default=1)
    pg.add_argument("--m", type=int, default=1)
    pg.add_argument("--out", required=True, help="output directory")
    pg.add_argument("--seed", type=int, required=True)

    pv = sub.add_parser("verify", help="run a cross-validation property suite")
    pv.add_argument("--suite", required=True, choices=sorted(SUITES))
    pv.add_argument("--n", type=int, default=12)
    pv.add_argument("--seed", type=int, default=0)
    return parser


def _parse_ell(text):
    if text.strip().lower() == "inf":
        return math.inf
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"--ell must be an integer or 'inf', got {text!r}")


def _load_problem(args):
    a = read_matrix_market(args.a)
    b = read_matrix_market(args.b) if args.b else None
    c = read_matrix_market(args.c)
    e = read_matrix_market(args.e) if args.e else None
    if b is not None and hasattr(b, "toarray"):
        b = b.toarray()
    if hasattr(c, "toarray"):
        c = c.toarray()
    return RiccatiProblem(a, b, c, e)


def _strategy(args):
    if args.shifts == "file":
        if not args.shift_file:
            raise ValueError("--shifts file requires --shift-file PATH")
        return UserList.from_file(args.shift_file)
    if args.shifts == "penzl":
        return PenzlConfig()
    ell = _parse_ell(args.ell)
    return DynamicConfig(ell=ell, optimize=args.shifts == "ham-opt")


def _write_history(path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "shift_re", "shift_im", "relres", "z_cols", "wall_time_s"])
        for rec in history:
            writer.writerow(
                [
                    rec.step,
                    repr(rec.shift.real),
                    repr(rec.shift.imag),
                    repr(rec.relres),
                    rec.width,
                    repr(rec.wall_time_s),
                ]
            )


def _cmd_solve(args):
    problem = _load_problem(args)
    strategy = _strategy(args)
    options = SolveOptions(
        tol=args.tol,
        maxiter=args.maxiter,
        arithmetic=Arithmetic.REAL_MERGED if args.arithmetic == "real" else Arithmetic.COMPLEX,
        norm=args.norm,
    )
    outcome = solve(problem, strategy, options)
    history = outcome.history
    if args.history:
        _write_history(args.history, history)
    total = history[-1].wall_time_s if history else 0.0
    width = outcome.state.width
    print(
        f"status={outcome.status.value} iterations={len(history)} "
        f"width={width} time_s={total:.3f}"
    )
    if outcome.diagnostic:
        print(f"diagnostic: {outcome.diagnostic}")
    return 0 if outcome.status is Status.CONVERGED else 2


def _cmd_gen(args):
    problem = generate_cube(args.grid, p=args.p, m=args.m, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    paths = {}
    for name, mat in (("A", problem.a), ("B", problem.b), ("C", problem.c)):
        path = os.path.join(args.out, f"{name}.mtx")
        write_matrix_market(path, mat, comment=f"cube grid={args.grid} seed={args.seed}")
        paths[name] = path
    print(
        f"generated n={problem.n} m={problem.m} p={problem.p}: "
        + " ".join(paths[k] for k in ("A", "B", "C"))
    )
    return 0


def _cmd_verify(args):
    results = run_verify(args.suite, n=args.n, seed=args.seed)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "gen":
            return _cmd_gen(args)
        return _cmd_verify(args)
    except (RadiError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
