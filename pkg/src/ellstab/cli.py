"""Batch orchestration: experiment subcommands, sweeps, CSV/JSON reports.

Exit status: 0 when every asserted check passes, 1 on a failed verification,
2 on a usage error.  Each sweep writes one CSV with a fixed header; each run
writes one JSON summary (the only place a timestamp appears).  Failed checks
name the violated claim in the summary.  Numbers are serialized with 17
significant digits, so identical configurations give byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import degenerate as degen
from . import estimates, gelfand, profiles, spectral
from .errors import EllstabError, ExistencePreconditionError
from .grid import ProblemParams, make_grid
from .util import parallel_map

CSV_HEADERS = {
    "counterexample": [
        "N", "r0", "sup_norm", "l1_norm", "lp_norm", "quotient",
        "radial_index", "index_inner", "index_annulus",
    ],
    "gelfand": ["N", "m", "lambda", "sup_norm", "l1_norm", "h1_norm", "radial_index"],
    "hh-verify": ["N", "alpha", "case", "r", "u_abs", "bound", "ratio"],
    "degenerate": ["mu", "lambda1"],
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_summary(path: Path, experiment, config, results, checks):
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "experiment": experiment,
        "config": config,
        "results": results,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, default=_fmt)
        fh.write("\n")
    return doc


def _check(checks, claim, passed, detail):
    checks.append({"claim": claim, "passed": bool(passed), "detail": detail})
    return passed


def _load_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Merge a JSON config file under explicitly passed flags."""
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    passed_flags = {
        a.dest
        for a in parser._actions
        if any(opt in sys.argv for opt in a.option_strings)
    }
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and dest not in passed_flags:
            setattr(args, dest, value)
    return args


# ---------------------------------------------------------------------------
# subcommands


def _cmd_counterexample(args) -> int:
    params = ProblemParams(N=args.dim)
    out = Path(args.report)
    checks = []
    p = math.inf if args.p in ("inf", None) else float(args.p)
    q = float(args.q)

    def one(r0: float):
        profile, nl, grid = estimates.counterexample_profile(
            params, r0, node_count=args.nodes
        )
        def index_on(domain, inner_bc):
            spec = spectral.QuadraticFormSpec(
                params=params, domain=domain, inner_bc=inner_bc
            )
            pencil = spectral.assemble_pencil(spec, grid, profile=profile, nonlinearity=nl)
            return spectral.morse_index(pencil)
        idx_full = index_on((0.0, 1.0), "natural")
        idx_inner = index_on((0.0, r0), "natural")
        idx_ann = index_on((r0, 1.0), "dirichlet")
        sup = estimates.lp_norm(profile, math.inf)
        l1 = estimates.lp_norm(profile, 1.0)
        lp = estimates.lp_norm(profile, p)
        lq = estimates.lp_norm(profile, q)
        return [args.dim, r0, sup, l1, lp, lp / lq, idx_full, idx_inner, idx_ann]

    rows = parallel_map(one, sorted(args.r0))
    _write_csv(out / "counterexample.csv", CSV_HEADERS["counterexample"], rows)
    for row in rows:
        _check(
            checks,
            "morse-index-one-counterexample",
            row[6] == 1 and row[7] == 0 and row[8] == 0,
            {"r0": row[1], "radial_index": row[6], "inner": row[7], "annulus": row[8]},
        )
        _check(
            checks,
            "sup-norm-lower-bound",
            row[2] >= row[1] ** 2 / 2.0,
            {"r0": row[1], "sup_norm": row[2]},
        )
    doc = _write_summary(
        out / "counterexample_summary.json",
        "counterexample",
        vars(args) | {"p": str(p), "q": q},
        {"rows": len(rows)},
        checks,
    )
    return 0 if doc["passed"] else 1


def _cmd_morse(args) -> int:
    params = ProblemParams(N=args.dim)
    grid = make_grid("graded", node_count=args.nodes)
    out = Path(args.report)
    checks = []
    kind, _, value = args.potential.partition(":")
    if kind == "const":
        V = np.full(grid.n, float(value))
    elif kind == "zero":
        V = np.zeros(grid.n)
    else:
        print(f"unknown potential {args.potential!r}; use const:<value> or zero", file=sys.stderr)
        return 2
    spec = spectral.QuadraticFormSpec(params=params, domain=(0.0, 1.0), potential=V)
    pencil = spectral.assemble_pencil(spec, grid)
    radial = spectral.morse_index(pencil)
    eigs = spectral.smallest_eigenvalues(pencil, min(max(radial + 1, 1), 6))
    counts = {0: radial}
    l = 0
    while counts[l] > 0:
        l += 1
        spec_l = spectral.QuadraticFormSpec(
            params=params, domain=(0.0, 1.0), potential=V, angular_l=l
        )
        counts[l] = spectral.morse_index(spectral.assemble_pencil(spec_l, grid))
    full = sum(c * spectral.angular_multiplicity(ll, params.N) for ll, c in counts.items())
    _check(checks, "radial-le-full-index", radial <= full, {"radial": radial, "full": full})
    doc = _write_summary(
        out / "morse_summary.json",
        "morse",
        vars(args),
        {
            "radial_index": radial,
            "full_index": full,
            "per_l_counts": {str(k): v for k, v in counts.items()},
            "smallest_eigenvalues": [float(e) for e in eigs],
        },
        checks,
    )
    return 0 if doc["passed"] else 1


def _cmd_hh_verify(args) -> int:
    params = ProblemParams(N=args.dim, alpha=args.alpha)
    grid = make_grid("graded", node_count=args.nodes)
    out = Path(args.report)
    checks = []
    gap = params.critical_dim - params.N
    case = "critical" if abs(gap) <= 1e-12 else ("supercritical" if gap < 0 else "subcritical")
    if case == "subcritical":
        print(
            f"N={args.dim}, alpha={args.alpha}: below the threshold dimension there is "
            "no explicit singular solution to verify",
            file=sys.stderr,
        )
        return 2
    profile, nl = profiles.explicit_hh_solution(params, case, grid)
    margin = estimates.hardy_stability_margin(profile, nl)
    check = estimates.check_pointwise_estimate(profile)
    ann = estimates.h1_norm(profile, 0.5, 1.0)
    rows = []
    stride = max(1, grid.n // args.csv_rows)
    for i in range(0, grid.n, stride):
        r, ratio = check.ratio_series[i]
        u_abs = abs(profile.u[i])
        bound = u_abs / (ratio * ann) if ratio > 0 else math.inf
        rows.append([args.dim, args.alpha, case, r, u_abs, bound, ratio])
    _write_csv(out / "hh_verify.csv", CSV_HEADERS["hh-verify"], rows)
    _check(
        checks,
        "hardy-comparison-margin",
        margin >= -1e-10,
        {"margin": margin, "case": case},
    )
    _check(
        checks,
        "pointwise-bound-sup-finite",
        math.isfinite(check.sup_ratio) and check.refinement_drift < 0.02,
        {"sup_ratio": check.sup_ratio, "drift": check.refinement_drift},
    )
    doc = _write_summary(
        out / "hh_summary.json",
        "hh-verify",
        vars(args),
        {"case": case, "hardy_margin": margin, "sup_ratio": check.sup_ratio},
        checks,
    )
    return 0 if doc["passed"] else 1


def _cmd_gelfand(args) -> int:
    params = ProblemParams(N=args.dim)
    grid = make_grid("graded", node_count=args.nodes)
    out = Path(args.report)
    checks = []
    if args.family == "power-qn":
        q = gelfand.joseph_lundgren_power(args.dim)
        nl = profiles.PowerNonlinearity(coeff=1.0, exponent=q, shift=1.0)
    elif args.family == "exp":
        nl = profiles.ExponentialNonlinearity(coeff=1.0, rate=1.0)
    elif args.family == "const":
        nl = profiles.ConstantNonlinearity(value=1.0)
    else:
        print(f"unknown family {args.family!r}", file=sys.stderr)
        return 2
    m_hi = args.m_max
    m_lo = m_hi / 10.0**args.m_decades
    m_grid = np.exp(np.linspace(math.log(m_lo), math.log(m_hi), args.points))
    report = gelfand.trace_branch(params, nl, m_grid, grid)
    rows = [
        [args.dim, p.m, p.lam, p.sup_norm, p.l1_norm, p.h1_norm, p.radial_morse_index]
        for p in report.points
    ]
    _write_csv(out / "gelfand.csv", CSV_HEADERS["gelfand"], rows)
    minimal = report.minimal_branch
    _check(
        checks,
        "minimal-branch-stable",
        all(p.radial_morse_index == 0 for p in minimal),
        {"indices": [p.radial_morse_index for p in minimal]},
    )
    mono = all(
        np.all(b.profile.u >= a.profile.u - 1e-8 * max(1.0, a.sup_norm))
        for a, b in zip(minimal, minimal[1:])
    )
    _check(checks, "minimal-branch-pointwise-monotone", mono, {})
    if report.extremal_reference is not None:
        lam_closed = report.extremal_reference[1]
        _check(
            checks,
            "fold-parameter-closed-form",
            abs(report.lambda_star - lam_closed) <= 0.01 * lam_closed,
            {"lambda_star": report.lambda_star, "closed_form": lam_closed},
        )
    doc = _write_summary(
        out / "gelfand_summary.json",
        "gelfand",
        vars(args),
        {
            "lambda_star": report.lambda_star,
            "minimal_branch_points": len(minimal),
            "points": len(report.points),
        },
        checks,
    )
    return 0 if doc["passed"] else 1


def _cmd_degenerate(args) -> int:
    params = ProblemParams(N=args.dim)
    grid = make_grid("uniform", node_count=args.nodes)
    out = Path(args.report)
    checks = []
    rho = args.rho
    spec = degen.DegenerateSpec(
        params=params,
        rho=rho,
        h=lambda r: (r > rho).astype(float),
        g=profiles.LinearNonlinearity(slope=args.lam),
        f=profiles.SignedPowerNonlinearity(coeff=1.0, power=3.0),
        lambda_slope=args.lam,
    )
    mu_sweep = [float(m) for m in args.mu]
    curve = degen.lambda1_curve(spec, mu_sweep, grid)
    _write_csv(out / "degenerate.csv", CSV_HEADERS["degenerate"], curve)
    lam_vals = [v for _, v in curve]
    _check(
        checks,
        "penalized-eigenvalue-monotone",
        all(b >= a - 1e-10 for a, b in zip(lam_vals, lam_vals[1:])),
        {"curve": curve},
    )
    results = {"lambda1_curve": curve}
    try:
        rep = degen.signed_solutions(spec, grid, mu_sweep=mu_sweep)
        results["solved"] = True
        results["iterations"] = rep.iterations
        _check(checks, "signed-solutions-ordered", rep.ordering_certificate, {})
        _check(
            checks,
            "signed-solutions-strict-sign",
            bool(
                np.all(rep.positive_solution.u[:-1] > 0)
                and np.all(rep.negative_solution.u[:-1] < 0)
            ),
            {},
        )
    except ExistencePreconditionError as exc:
        results["solved"] = False
        results["reason"] = str(exc)
    doc = _write_summary(
        out / "degenerate_summary.json", "degenerate", vars(args), results, checks
    )
    return 0 if doc["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ellstab",
        description="Numerical checks on stable and finite-index radial elliptic solutions",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--report", default="out", help="output directory")
        p.add_argument("--nodes", type=int, default=2048, help="grid node count")
        p.add_argument("--config", default=None, help="JSON config merged under explicit flags")

    p = sub.add_parser("counterexample", help="index-1 unbounded family sweep")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--r0", type=float, action="append", required=True)
    p.add_argument("--p", default="inf")
    p.add_argument("--q", type=float, default=1.0)
    common(p)

    p = sub.add_parser("morse", help="index counts for a prescribed potential")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--potential", default="zero", help="const:<value> or zero")
    common(p)

    p = sub.add_parser("hh-verify", help="pointwise bounds of the weighted problem")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--csv-rows", type=int, default=256)
    common(p)

    p = sub.add_parser("gelfand", help="shooting branch and fold location")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--family", default="exp", choices=["exp", "power-qn", "const"])
    p.add_argument("--m-decades", type=float, default=3.0)
    p.add_argument("--m-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=40)
    common(p)

    p = sub.add_parser("degenerate", help="penalized eigenvalues and signed solutions")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--lam", type=float, default=20.0)
    p.add_argument("--mu", type=float, action="append",
                   default=None, help="penalization sweep value (repeatable)")
    common(p)

    return parser


_DISPATCH = {
    "counterexample": _cmd_counterexample,
    "morse": _cmd_morse,
    "hh-verify": _cmd_hh_verify,
    "gelfand": _cmd_gelfand,
    "degenerate": _cmd_degenerate,
}


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if getattr(args, "mu", None) is None and args.command == "degenerate":
        args.mu = [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]
    args = _load_config(args, parser)
    try:
        return _DISPATCH[args.command](args)
    except EllstabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
