"""Command-line front end.

Subcommands: ``gen`` fabricates benchmark systems, ``solve`` runs a
method under either arithmetic and writes the trace CSV, ``compare``
pairs two traces, ``active`` counts the active eigenvalues of a
diagonal system.  Every invocation is captured as a RunManifest, and
re-running a manifest reproduces the output byte for byte.

Exit codes: 0 solved, 1 step limit hit without convergence, 2 usage or
malformed input, 3 matrix not SPD, 4 bit budget exceeded, 5 traces not
comparable.
"""

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass

from . import benchgen
from .analysis import (
    BUDGET_EXCEEDED,
    CONVERGED,
    MAX_STEPS,
    compare,
    count_active,
    emit_csv,
    parse_csv,
    render_report,
)
from .arithmetic import BitBudget, parse_decimal
from .errors import (
    BudgetExceeded,
    DiagonalRequired,
    DimensionError,
    ExactRequired,
    FormatError,
    IncomparableTraces,
    InvalidRotation,
    InvalidStiffness,
    IoError,
    NotSPD,
    ZeroInitialResidual,
)
from .linalg import (
    Vector,
    demote_matrix,
    demote_vector,
    is_matrix_market,
    read_matrix,
    read_matrix_market,
    read_vector,
    snap_matrix,
    snap_vector,
    write_matrix,
    write_vector,
)
from .solvers import GENERATORS, METHODS, Perturbation, SolverConfig, solve

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_USAGE = 2
EXIT_NOT_SPD = 3
EXIT_BUDGET = 4
EXIT_INCOMPARABLE = 5

_USAGE_ERRORS = (
    FormatError,
    IoError,
    DimensionError,
    ExactRequired,
    InvalidRotation,
    InvalidStiffness,
    DiagonalRequired,
    ZeroInitialResidual,
    ValueError,
)


@dataclass(frozen=True)
class RunManifest:
    """A fully serialized invocation; the unit of reproducibility."""

    subcommand: str
    options: dict

    def to_json(self):
        return json.dumps(
            {"subcommand": self.subcommand, "options": self.options},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(subcommand=data["subcommand"], options=dict(data["options"]))


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="irmcg",
        description="Exact-rational and double-precision iterative SPD solvers.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gen = sub.add_parser("gen", help="fabricate a benchmark system")
    gen.add_argument("--spectrum", help="inline spectrum, e.g. 1x2,3/2x1,10x3i")
    gen.add_argument("--spectrum-file", help="spectrum file (see README)")
    gen.add_argument("--chain", type=int, help="spring chain with this many masses")
    gen.add_argument("--stiff", help="comma-separated spring stiffnesses for --chain")
    gen.add_argument(
        "--rhs",
        default="ones",
        help="ones | random | explicit:v1,v2,... (default ones)",
    )
    gen.add_argument("--rotate", type=int, default=0, help="number of seeded rotations")
    gen.add_argument("--seed", type=int, default=0, help="64-bit seed")
    gen.add_argument("-o", "--out", required=True, help="output directory")

    slv = sub.add_parser("solve", help="run a solver and write its trace")
    slv.add_argument("matrix", help="matrix file (native or MatrixMarket)")
    slv.add_argument("vector", help="right-hand side file")
    slv.add_argument("--method", choices=METHODS, default="irm-cg")
    slv.add_argument("--arith", choices=("exact", "f64"), default="exact")
    slv.add_argument("--omega", default="1", help="relaxation factor in (0,2)")
    slv.add_argument("--eps", default="0", help="relative residual tolerance")
    slv.add_argument("--refresh-k", type=int, default=None, help="refresh period")
    slv.add_argument("--max-steps", type=int, default=None, help="step cap (default 100n)")
    slv.add_argument("--x0", default=None, help="start vector file (default zeros)")
    slv.add_argument("--generator", choices=GENERATORS, default="residual+increment")
    slv.add_argument(
        "--perturb",
        action="append",
        default=[],
        metavar="STEP:COMP:DELTA",
        help="add DELTA to 1-based component COMP of p after step STEP",
    )
    slv.add_argument("--snap-zero", default=None, help="zero-snap threshold for inputs")
    slv.add_argument("--no-energy", action="store_true", help="skip the energy column")
    slv.add_argument("--max-bits", type=int, default=1_000_000, help="bit budget")
    slv.add_argument("--seed", type=int, default=0, help="seed recorded in the trace")
    slv.add_argument("-o", "--out", default=None, help="trace file (default stdout)")

    cmp_ = sub.add_parser("compare", help="pair two traces of one configuration")
    cmp_.add_argument("trace_e", help="reference trace (typically exact)")
    cmp_.add_argument("trace_dp", help="trace to compare against it")
    cmp_.add_argument("--gap", type=float, default=1.0, help="divergence gap in decades")

    act = sub.add_parser("active", help="count active eigenvalues of a diagonal system")
    act.add_argument("matrix", help="diagonal matrix file")
    act.add_argument("vector", help="right-hand side file")
    return parser


def manifest_from_argv(argv):
    ns = _build_parser().parse_args(argv)
    options = {k: v for k, v in vars(ns).items() if k != "subcommand"}
    return RunManifest(subcommand=ns.subcommand, options=options)


def _parse_rhs_option(text, n, seed):
    if text == "ones":
        return Vector.exact([1] * n)
    if text == "random":
        rng = random.Random(seed)
        return Vector.exact(
            [rng.choice([-1, 1]) * rng.randint(1, 9) for _ in range(n)]
        )
    if text.startswith("explicit:"):
        values = [parse_decimal(v) for v in text[len("explicit:"):].split(",")]
        if len(values) != n:
            raise FormatError("explicit rhs has %d entries for n = %d" % (len(values), n))
        return Vector.exact(values)
    raise FormatError("bad --rhs %r" % text)


def _run_gen(opts, out):
    sources = [opts.get("spectrum"), opts.get("spectrum_file"), opts.get("chain")]
    if sum(s is not None for s in sources) != 1:
        raise FormatError("give exactly one of --spectrum, --spectrum-file, --chain")
    seed = opts.get("seed", 0)
    outdir = opts["out"]
    os.makedirs(outdir, exist_ok=True)
    m = None
    if opts.get("chain") is not None:
        if not opts.get("stiff"):
            raise FormatError("--chain needs --stiff")
        n = opts["chain"]
        ks = [parse_decimal(t) for t in opts["stiff"].split(",")]
        A = benchgen.gen_spring_chain(n, ks)
        b = _parse_rhs_option(opts.get("rhs", "ones"), n, seed)
    else:
        rhs = opts.get("rhs", "ones")
        rule, values, rhs_seed = benchgen.RHS_ONES, None, None
        if rhs == "random":
            rule, rhs_seed = benchgen.RHS_RANDOM, seed
        elif rhs.startswith("explicit:"):
            rule = benchgen.RHS_EXPLICIT
            values = tuple(parse_decimal(v) for v in rhs[len("explicit:"):].split(","))
        elif rhs != "ones":
            raise FormatError("bad --rhs %r" % rhs)
        if opts.get("spectrum") is not None:
            spec = benchgen.parse_spectrum_inline(
                opts["spectrum"], rhs_rule=rule, rhs_values=values, rhs_seed=rhs_seed
            )
        else:
            spec = benchgen.read_spectrum_file(opts["spectrum_file"])
        rotations = opts.get("rotate", 0)
        if rotations:
            plan = benchgen.random_plan(spec.n, rotations, seed)
            A, b, m = benchgen.gen_rotated(spec, plan)
        else:
            A, b, m = benchgen.gen_diagonal(spec)
    write_matrix(A, os.path.join(outdir, "A.txt"))
    write_vector(b, os.path.join(outdir, "b.txt"))
    if m is not None:
        print("m=%d" % m, file=out)
    return EXIT_OK


def _load_matrix(path):
    if is_matrix_market(path):
        return read_matrix_market(path)
    return read_matrix(path)


def _run_solve(opts, out):
    A = _load_matrix(opts["matrix"])
    b = read_vector(opts["vector"])
    x0 = read_vector(opts["x0"]) if opts.get("x0") else None
    snap = opts.get("snap_zero")
    if snap is not None:
        threshold = parse_decimal(snap)
        A = snap_matrix(A, threshold)
        b = snap_vector(b, threshold)
    if opts.get("arith", "exact") == "f64":
        A = demote_matrix(A)
        b = demote_vector(b)
        x0 = demote_vector(x0) if x0 is not None else None
    perturbations = [_parse_perturbation(p) for p in opts.get("perturb", [])]
    cfg = SolverConfig(
        method=opts.get("method", "irm-cg"),
        omega=parse_decimal(opts.get("omega", "1")),
        epsilon=parse_decimal(opts.get("eps", "0")),
        refresh_k=opts.get("refresh_k"),
        max_steps=opts.get("max_steps"),
        generator=opts.get("generator", "residual+increment"),
        bit_budget=BitBudget(opts.get("max_bits", 1_000_000)),
        record_energy=not opts.get("no_energy", False),
    )
    _, trace = solve(
        A, b, x0=x0, cfg=cfg, perturbations=perturbations, seed=opts.get("seed", 0)
    )
    destination = opts.get("out")
    if destination is None:
        emit_csv(trace, out)
    else:
        emit_csv(trace, destination)
    if trace.termination == BUDGET_EXCEEDED:
        print("bit budget exceeded at step %d" % trace.steps, file=sys.stderr)
        return EXIT_BUDGET
    if trace.termination == MAX_STEPS:
        print("step limit reached without convergence", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    # Both remaining terminations mean the final residual satisfies the
    # tolerance (zero_initial_residual trivially so).
    return EXIT_OK


def _parse_perturbation(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise FormatError("--perturb wants STEP:COMP:DELTA, got %r" % text)
    try:
        step, comp = int(parts[0]), int(parts[1])
    except ValueError:
        raise FormatError("bad perturbation indices in %r" % text) from None
    return Perturbation(step, comp, parse_decimal(parts[2]))


def _run_compare(opts, out):
    tE = parse_csv(opts["trace_e"])
    tDP = parse_csv(opts["trace_dp"])
    report = compare(tE, tDP, gap=opts.get("gap", 1.0))
    print(render_report(report), file=out)
    return EXIT_OK


def _run_active(opts, out):
    D = _load_matrix(opts["matrix"])
    b = read_vector(opts["vector"])
    print("m=%d" % count_active(D, b), file=out)
    return EXIT_OK


_RUNNERS = {
    "gen": _run_gen,
    "solve": _run_solve,
    "compare": _run_compare,
    "active": _run_active,
}


def run_manifest(manifest, out=None):
    """Execute a manifest; identical manifests produce identical bytes."""
    out = sys.stdout if out is None else out
    return _RUNNERS[manifest.subcommand](manifest.options, out)


def main(argv=None):
    try:
        manifest = manifest_from_argv(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return run_manifest(manifest)
    except NotSPD as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NOT_SPD
    except BudgetExceeded as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_BUDGET
    except IncomparableTraces as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INCOMPARABLE
    except _USAGE_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
