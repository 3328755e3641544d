"""Command-line interface: ``psdglasso {check,estimate,certify,simulate,compare-oracle}``.

Exit codes: 0 estimate exists (or the command succeeded), 1 input error,
2 estimate does not exist, 3 undetermined, 4 solver did not converge,
5 certificate failed verification or oracle comparison out of tolerance.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as mio
from .existence import (
    EXISTS,
    NOT_EXISTS,
    decide_existence,
)
from .matrix import IndefiniteMatrixError, SymMatrix, classify_definiteness, eigendecompose
from .penalties import PenaltySpec, glasso, mle, odglasso, parse_atom, parse_preset
from .sampling import GaussianModel, existence_study, rank_census
from .solver import SolverConfig, brute_force_solve, solve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_EXISTS = 2
EXIT_UNDETERMINED = 3
EXIT_NOT_CONVERGED = 4
EXIT_FAILED_CHECK = 5

VERDICT_EXIT = {EXISTS: EXIT_OK, NOT_EXISTS: EXIT_NOT_EXISTS}

OBJ_GAP_TOL = 1e-6
ENTRY_GAP_TOL = 1e-4

STUDY_COLUMNS = ["n", "replicates", "exists_rate", "mean_zero_eigen_count"]
CENSUS_COLUMNS = ["n", "replicates", "fraction_matching_theory", "expected_zero_eigen_count"]


class InputError(Exception):
    pass


def _add_penalty_flags(p):
    g = p.add_argument_group("penalty")
    g.add_argument("--diag", metavar="ATOM", help="diagonal atom, e.g. zero, l1:0.5, mcp:0.5:3")
    g.add_argument("--offdiag", metavar="ATOM", help="off-diagonal atom")
    g.add_argument("--mle", action="store_true", help="no penalty (zero/zero)")
    g.add_argument("--glasso", type=float, metavar="RHO", help="l1 on every entry")
    g.add_argument("--odglasso", type=float, metavar="RHO", help="l1 on off-diagonal entries only")


def penalty_from_args(args) -> PenaltySpec:
    shorthands = [x for x in ("mle", "glasso", "odglasso") if getattr(args, x) not in (None, False)]
    explicit = args.diag is not None or args.offdiag is not None
    if len(shorthands) > 1 or (shorthands and explicit):
        raise InputError("give either --diag/--offdiag or one of --mle/--glasso/--odglasso")
    try:
        if args.mle:
            return mle()
        if args.glasso is not None:
            return glasso(args.glasso)
        if args.odglasso is not None:
            return odglasso(args.odglasso)
        if not explicit:
            raise InputError("no penalty given")
        return PenaltySpec(parse_atom(args.diag or "zero"), parse_atom(args.offdiag or "zero"))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _input_summary(path, S: SymMatrix, rel_tol):
    cls = classify_definiteness(eigendecompose(S), rel_tol)
    return {
        "path": str(path),
        "p": S.dim,
        "definiteness": cls.tag,
        "zero_eigen_count": cls.zero_eigen_count,
        "min_diagonal": float(np.min(np.diag(S.array))),
    }


def _load(args):
    try:
        S = mio.read_matrix(args.matrix)
    except mio.MatrixFileError as exc:
        raise InputError(str(exc)) from None
    spec = penalty_from_args(args)
    return S, spec


def _decide(S, spec, rel_tol):
    try:
        return decide_existence(S, spec, rel_tol)
    except IndefiniteMatrixError as exc:
        raise InputError(str(exc)) from None


def _base_report(command, args, S, spec, verdict, timings):
    return {
        "schema_version": mio.SCHEMA_VERSION,
        "command": command,
        "input_summary": _input_summary(args.matrix, S, args.rel_tol),
        "penalty_spec": spec.describe(),
        "verdict": {"verdict": verdict.tag, "rule": verdict.rule, "reason": verdict.reason},
        "estimate": None,
        "certificate": verdict.certificate.to_dict() if verdict.certificate else None,
        "verification": verdict.verification.to_dict() if verdict.verification else None,
        "timings": timings,
    }


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def cmd_check(args) -> int:
    S, spec = _load(args)
    t0 = time.perf_counter()
    verdict = _decide(S, spec, args.rel_tol)
    report = _base_report("check", args, S, spec, verdict,
                          {"decide_seconds": time.perf_counter() - t0})
    _emit(mio.dumps_report(report), args.out)
    return VERDICT_EXIT.get(verdict.tag, EXIT_UNDETERMINED)


def cmd_estimate(args) -> int:
    S, spec = _load(args)
    t0 = time.perf_counter()
    verdict = _decide(S, spec, args.rel_tol)
    timings = {"decide_seconds": time.perf_counter() - t0}
    report = _base_report("estimate", args, S, spec, verdict, timings)
    if verdict.tag != EXISTS:
        if not (args.force and args.eigen_cap):
            print(f"estimate not computed: verdict {verdict.tag} ({verdict.rule}); "
                  "use --force with --eigen-cap to solve a capped problem", file=sys.stderr)
            _emit(mio.dumps_report(report), args.out)
            return VERDICT_EXIT.get(verdict.tag, EXIT_UNDETERMINED)
    cfg = SolverConfig(max_iter=args.max_iter, rel_obj_tol=args.tol, eigen_cap=args.eigen_cap)
    t1 = time.perf_counter()
    est = solve(S, spec, cfg)
    timings["solve_seconds"] = time.perf_counter() - t1
    report["estimate"] = dict(est.to_dict(), eigen_cap=cfg.eigen_cap)
    _emit(mio.dumps_report(report), args.out)
    theta_out = args.theta_out
    if theta_out is None and args.out:
        theta_out = str(Path(args.out).with_suffix("")) + ".theta.csv"
    if theta_out:
        mio.write_matrix(theta_out, est.theta)
    if not est.converged:
        return EXIT_NOT_CONVERGED
    return VERDICT_EXIT.get(verdict.tag, EXIT_UNDETERMINED)


def cmd_certify(args) -> int:
    S, spec = _load(args)
    t0 = time.perf_counter()
    verdict = _decide(S, spec, args.rel_tol)
    report = _base_report("certify", args, S, spec, verdict,
                          {"decide_seconds": time.perf_counter() - t0})
    if verdict.tag == EXISTS:
        print("nothing to certify: the estimate exists", file=sys.stderr)
        return EXIT_INPUT
    _emit(mio.dumps_report(report), args.out)
    if verdict.tag != NOT_EXISTS:
        print(f"nothing to certify: verdict {verdict.tag}", file=sys.stderr)
        return EXIT_UNDETERMINED
    return EXIT_OK if verdict.verification.passed else EXIT_FAILED_CHECK


def _int_list(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad integer list {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise InputError(f"sample sizes must be positive integers, got {text!r}")
    return vals


def cmd_simulate(args) -> int:
    if args.p < 1 or args.reps < 1:
        raise InputError("--p and --reps must be positive")
    n_grid = _int_list(args.n)
    if args.penalty:
        if args.diag or args.offdiag:
            raise InputError("give either --penalty or --diag/--offdiag")
        try:
            spec = parse_preset(args.penalty)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        spec = penalty_from_args(args)
    model = GaussianModel.standard(args.p, args.mean_known)
    if args.census:
        rows = []
        for n in n_grid:
            r = rank_census(model, n, args.reps, args.seed, args.threads)
            rows.append({"n": n, "replicates": args.reps,
                         "fraction_matching_theory": r["fraction_matching_theory"],
                         "expected_zero_eigen_count": r["expected_zero_eigen_count"]})
        columns = CENSUS_COLUMNS
    else:
        rows = existence_study(model, n_grid, spec, args.reps, args.seed, args.threads)
        columns = STUDY_COLUMNS
    if args.out:
        with open(args.out, "w", newline="") as fh:
            mio.write_rows_csv(fh, rows, columns)
    else:
        mio.write_rows_csv(sys.stdout, rows, columns)
    return EXIT_OK


def cmd_compare_oracle(args) -> int:
    spec = penalty_from_args(args)
    if args.matrix:
        try:
            S = mio.read_matrix(args.matrix)
        except mio.MatrixFileError as exc:
            raise InputError(str(exc)) from None
    elif args.random:
        rng = np.random.default_rng(args.seed)
        A = rng.normal(size=(args.random, args.random + 2))
        S = SymMatrix.symmetrized(A @ A.T / A.shape[1])
    else:
        raise InputError("give a matrix file or --random P")
    if S.dim > 3:
        raise InputError("compare-oracle supports p <= 3 only")
    verdict = _decide(S, spec, 1e-10)
    if verdict.tag != EXISTS:
        print(f"verdict {verdict.tag} ({verdict.rule}); nothing to compare", file=sys.stderr)
        return VERDICT_EXIT.get(verdict.tag, EXIT_UNDETERMINED)
    est = solve(S, spec)
    brute = brute_force_solve(S, spec, seed=args.seed)
    obj_gap = abs(est.objective.total - brute.objective.total)
    entry_gap = float(np.max(np.abs(est.theta.array - brute.theta.array)))
    print(f"solver objective      {est.objective.total:.17g}")
    print(f"brute-force objective {brute.objective.total:.17g}")
    print(f"objective gap         {obj_gap:.3e} (tol {OBJ_GAP_TOL:g})")
    print(f"entrywise gap         {entry_gap:.3e} (tol {ENTRY_GAP_TOL:g})")
    ok = obj_gap <= OBJ_GAP_TOL and entry_gap <= ENTRY_GAP_TOL
    if spec.diagonal.is_zero and spec.off_diagonal.is_zero:
        inv_gap = float(np.max(np.abs(est.theta.array - np.linalg.inv(S.array))))
        print(f"gap to S^-1           {inv_gap:.3e} (tol {ENTRY_GAP_TOL:g})")
        ok = ok and inv_gap <= ENTRY_GAP_TOL
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAILED_CHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psdglasso",
        description="Existence checks, certificates and estimates for penalised "
                    "Gaussian precision matrices.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def matrix_cmd(name, help_, func):
        p = sub.add_parser(name, help=help_)
        p.add_argument("matrix", help="headerless CSV file holding S")
        _add_penalty_flags(p)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--rel-tol", type=float, default=1e-10,
                       help="relative tolerance for zero eigenvalues")
        p.set_defaults(func=func)
        return p

    matrix_cmd("check", "decide whether the estimate exists", cmd_check)
    est = matrix_cmd("estimate", "decide existence, then solve", cmd_estimate)
    est.add_argument("--max-iter", type=int, default=10000)
    est.add_argument("--tol", type=float, default=1e-10, help="relative objective tolerance")
    est.add_argument("--force", action="store_true", help="solve even without existence")
    est.add_argument("--eigen-cap", type=float, help="clip eigenvalues of iterates at this value")
    est.add_argument("--theta-out", help="write the estimate as CSV here")
    matrix_cmd("certify", "emit and verify a divergence certificate", cmd_certify)

    sim = sub.add_parser("simulate", help="Monte Carlo existence study on Gaussian data")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--n", required=True, help="comma-separated sample sizes")
    sim.add_argument("--penalty", help="preset: mle, glasso:RHO or odglasso:RHO")
    sim.add_argument("--diag")
    sim.add_argument("--offdiag")
    sim.add_argument("--reps", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--mean-known", action="store_true")
    sim.add_argument("--census", action="store_true",
                     help="report zero-eigenvalue census instead of existence rates")
    sim.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: PSDGLASSO_THREADS or CPU count)")
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate, mle=False, glasso=None, odglasso=None)

    cmp_ = sub.add_parser("compare-oracle", help="compare solver with the brute-force oracle (p <= 3)")
    cmp_.add_argument("matrix", nargs="?")
    cmp_.add_argument("--random", type=int, metavar="P", help="use a random PD matrix of size P")
    cmp_.add_argument("--seed", type=int, default=0)
    _add_penalty_flags(cmp_)
    cmp_.set_defaults(func=cmd_compare_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, which would read as "does not exist"
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
