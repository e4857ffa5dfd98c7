"""Command-line interface: ``nlbvp {validate,constants,certify,solve,reproduce,sweep}``.

Exit codes: 0 ok, 1 inadmissible, 2 parse/usage error, 3 inconclusive
asymptotics, 4 no convergence, 5 reproduction mismatch.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .builtin import EXPECTED, example
from .cone_constants import DegenerateCoefficientError, check_coefficients, compute_constants
from .criteria import (
    InconclusiveAsymptoticsError,
    Limit,
    certify_report,
    estimate_asymptotics,
    evaluate,
    primary_certificate,
)
from .expr import ExprEvalError
from .linear_kernel import ADMISSIBLE, InvalidParamsError, check_nonexistence_region
from .operator import OperatorContext, OperatorEvalError
from .problem import ProblemSpec, SpecError, load, parse_real
from .solver import NoConvergenceError, SolveOptions, classify_against_certificates, solve_fixed_points

log = logging.getLogger("nlbvp")

EXIT_OK = 0
EXIT_INADMISSIBLE = 1
EXIT_PARSE = 2
EXIT_INCONCLUSIVE = 3
EXIT_NO_CONVERGENCE = 4
EXIT_MISMATCH = 5

REPRODUCE_REL_TOL = 1e-9
SWEEP_COLUMNS = ("alpha", "beta", "eta", "T", "admissible", "gamma", "lambda1", "lambda2",
                 "fired_certificates")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


def fmt(x) -> str:
    """12 significant digits, dot decimal separator, 'inf' for infinities."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _interval(lo: float, hi: float) -> str:
    return f"{fmt(lo)},{fmt(hi)}"


class Out:
    """Human-readable or ``key=value`` output."""

    def __init__(self, porcelain: bool, stream=None):
        self.porcelain = porcelain
        self.stream = stream or sys.stdout

    def kv(self, key: str, value, label: str | None = None):
        text = value if isinstance(value, str) else fmt(value)
        if self.porcelain:
            print(f"{key}={text}", file=self.stream)
        else:
            print(f"{label or key}: {text}", file=self.stream)

    def text(self, line: str):
        if not self.porcelain:
            print(line, file=self.stream)


def _load(path: str) -> ProblemSpec:
    try:
        return load(path, validate=False)
    except SpecError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def _require_admissible(spec: ProblemSpec):
    cls = _classification(spec)
    if cls != ADMISSIBLE:
        problems = "; ".join(spec.params.violations())
        raise CliError(f"{cls}: {problems}", EXIT_INADMISSIBLE)


def _classification(spec: ProblemSpec) -> str:
    p = spec.params
    try:
        return check_nonexistence_region(p.alpha, p.beta, p.eta, p.T)
    except InvalidParamsError as exc:
        raise CliError(str(exc), EXIT_INADMISSIBLE) from exc


def _constants(spec: ProblemSpec):
    try:
        return compute_constants(spec.params, spec.a)
    except DegenerateCoefficientError as exc:
        raise CliError(f"degenerate coefficient ({exc.condition}): {exc}", EXIT_INADMISSIBLE) from exc
    except ExprEvalError as exc:
        raise CliError(f"evaluating a(t): {exc}", EXIT_INADMISSIBLE) from exc


def _certify(spec: ProblemSpec, constants, asym=None):
    try:
        return certify_report(spec, constants, asym)
    except InconclusiveAsymptoticsError as exc:
        raise CliError(f"inconclusive asymptotics: {exc}\n"
                       "add an [asymptotics] section with f0 and finf (0, inf, or a number)",
                       EXIT_INCONCLUSIVE) from exc


# -- validate / constants ----------------------------------------------------------


def cmd_validate(args) -> int:
    spec = _load(args.spec)
    out = Out(args.porcelain)
    p = spec.params
    cls = _classification(spec)
    out.kv("classification", cls)
    out.kv("alpha", p.alpha)
    out.kv("alpha_sup", p.alpha_sup)
    out.kv("beta", p.beta)
    out.kv("beta_sup", p.beta_sup)
    for v in p.violations():
        out.text(f"  {v}")
    try:
        chk = check_coefficients(spec.a, spec.f, p)
        out.kv("B1.a_nonneg", chk.a_nonneg, "B1 a(t) >= 0 on [0,T]")
        out.kv("B2.a_positive_on_tail", chk.a_positive_somewhere_on_tail,
               "B2 a(t) > 0 somewhere on [eta,T]")
        out.kv("f_nonneg", chk.f_nonneg, "f(u) >= 0 on sampled [0,1e6]")
        out.kv("coefficient_evidence", chk.evidence)
    except ExprEvalError as exc:
        out.kv("coefficient_error", str(exc))
    return EXIT_OK if cls == ADMISSIBLE else EXIT_INADMISSIBLE


def cmd_constants(args) -> int:
    spec = _load(args.spec)
    _require_admissible(spec)
    c = _constants(spec)
    out = Out(args.porcelain)
    out.kv("gamma", c.gamma)
    out.kv("lambda1", c.lambda1)
    out.kv("lambda2", c.lambda2)
    out.kv("lambda2_over_gamma", c.lambda2_over_gamma)
    for k, b in enumerate(c.gamma_branches, 1):
        out.kv(f"gamma_branch{k}", b)
    out.kv("alpha_sup", c.alpha_sup)
    out.kv("beta_sup", c.beta_sup)
    return EXIT_OK


# -- certify -------------------------------------------------------------------------


def _print_report(out: Out, rep):
    a = rep.asymptotics
    out.kv("asymptotics.f0", str(a.f0), "f0")
    out.kv("asymptotics.finf", str(a.f_inf), "finf")
    out.kv("asymptotics.evidence", a.evidence, "asymptotics evidence")
    for name in ("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8", "D1", "D2"):
        w = rep.witnesses.get(name)
        if w is None:
            continue
        if out.porcelain:
            out.kv(f"hypothesis.{name}.holds", w.holds)
            for attr in ("rho", "M", "theta", "extremum"):
                val = getattr(w, attr)
                if val is not None:
                    out.kv(f"hypothesis.{name}.{attr}", val)
            out.kv(f"hypothesis.{name}.marginal", w.marginal)
        else:
            extra = " ".join(f"{attr}={fmt(getattr(w, attr))}"
                             for attr in ("rho", "M", "theta", "extremum")
                             if getattr(w, attr) is not None)
            flag = " (marginal)" if w.marginal else ""
            out.text(f"  {name}: {'holds' if w.holds else 'fails'}{flag} {extra}".rstrip())
    certs = rep.certificates
    primary = primary_certificate(certs)
    out.kv("certificate.count", str(len(certs)), "certificates fired")
    out.kv("certificate.primary", primary.theorem if primary else "none", "primary")
    for i, c in enumerate(certs):
        if out.porcelain:
            out.kv(f"certificate.{i}.theorem", c.theorem)
            out.kv(f"certificate.{i}.solutions", str(c.solution_count_guaranteed))
            for k, (lo, hi) in enumerate(c.norm_localization):
                out.kv(f"certificate.{i}.interval.{k}", _interval(lo, hi))
            out.kv(f"certificate.{i}.marginal", c.marginal)
        else:
            note = "  [marginal]" if c.marginal else ""
            out.text(c.summary() + note)
    if not certs:
        out.text("no certificate fires")


def cmd_certify(args) -> int:
    spec = _load(args.spec)
    _require_admissible(spec)
    c = _constants(spec)
    rep = _certify(spec, c)
    _print_report(Out(args.porcelain), rep)
    return EXIT_OK


# -- solve ---------------------------------------------------------------------------


def _solve_options(spec: ProblemSpec, n: int | None, rho_ref: float) -> SolveOptions:
    kw = {"rho_ref": rho_ref}
    if n is not None or spec.grid_n is not None:
        kw["grid_n"] = n if n is not None else spec.grid_n
    if spec.residual_tol is not None:
        kw["residual_tol"] = spec.residual_tol
    if spec.max_iterations is not None:
        kw["max_iterations"] = spec.max_iterations
    if spec.start_scales is not None:
        kw["start_scales"] = spec.start_scales
    return SolveOptions(**kw)


def _rho_ref(certs) -> float:
    primary = primary_certificate(certs)
    if primary is None:
        return 1.0
    ends = [x for iv in primary.norm_localization for x in iv if 0 < x < math.inf]
    return float(np.sqrt(min(ends) * max(ends))) if ends else 1.0


def run_solve(spec: ProblemSpec, n: int | None = None, certs=None):
    """Solve and bucket; returns (report, certificates, bucket report)."""
    if certs is None:
        try:
            certs = certify_report(spec, compute_constants(spec.params, spec.a)).certificates
        except InconclusiveAsymptoticsError as exc:
            log.warning("no certificates (%s); solving without localization", exc)
            certs = []
    opts = _solve_options(spec, n, _rho_ref(certs))
    ctx = OperatorContext.build(spec.params, spec.a, spec.f, opts.n)
    try:
        report = solve_fixed_points(ctx, opts)
    except OperatorEvalError as exc:
        raise CliError(f"operator evaluation failed: {exc}", EXIT_NO_CONVERGENCE) from exc
    except NoConvergenceError as exc:
        raise CliError(f"no start converged; best residual {fmt(exc.best_residual)}",
                       EXIT_NO_CONVERGENCE) from exc
    buckets = classify_against_certificates(report.solutions, certs)
    return report, certs, buckets


def _dump(directory: Path, report) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, r in enumerate(report.solutions, 1):
        path = directory / f"solution_{k}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "u"))
            for t, u in zip(r.u.mesh.nodes, r.u.values):
                w.writerow((f"{t:.17g}", f"{u:.17g}"))
        paths.append(path)
    return paths


def cmd_solve(args) -> int:
    spec = _load(args.spec)
    _require_admissible(spec)
    _constants(spec)
    report, certs, buckets = run_solve(spec, args.n)
    out = Out(args.porcelain)
    out.kv("solutions.count", str(len(report.solutions)), "positive solutions")
    out.kv("trivial", report.trivial is not None, "trivial solution found")
    for k, r in enumerate(report.solutions, 1):
        if out.porcelain:
            pre = f"solution.{k}"
            out.kv(f"{pre}.sup_norm", r.sup_norm)
            out.kv(f"{pre}.fixed_point_residual", r.fixed_point_residual)
            out.kv(f"{pre}.ode_residual", r.ode_residual)
            out.kv(f"{pre}.bc_residual0", r.bc_residuals[0])
            out.kv(f"{pre}.bc_residual1", r.bc_residuals[1])
            out.kv(f"{pre}.in_cone", r.in_cone)
            out.kv(f"{pre}.bucket", r.certificate_bucket or "")
        else:
            out.text(f"solution {k}: |u| = {fmt(r.sup_norm)}")
            out.text(f"  fixed-point residual {fmt(r.fixed_point_residual)}, "
                     f"ode residual {fmt(r.ode_residual)}, "
                     f"bc residuals {fmt(r.bc_residuals[0])} {fmt(r.bc_residuals[1])}")
            out.text(f"  in cone: {'yes' if r.in_cone else 'no'}; "
                     f"bucket: {r.certificate_bucket or 'none'}; method {r.method}")
    if not report.solutions:
        out.text("no positive solution found")
    for label in buckets.empty:
        out.text(f"warning: no solution found in {label}")
    if args.dump:
        for path in _dump(Path(args.dump), report):
            out.text(f"wrote {path}")
    return EXIT_OK


# -- reproduce -----------------------------------------------------------------------


def _compare(rows, name, expected, computed):
    exp = float(expected)
    ok = computed is not None and math.isclose(computed, exp, rel_tol=REPRODUCE_REL_TOL, abs_tol=0.0)
    err = abs(computed - exp) / abs(exp) if computed is not None and exp != 0 else math.nan
    rows.append((name, fmt(exp), fmt(computed), fmt(err), ok))


def _compare_limit(rows, name, expected, computed: Limit):
    if isinstance(expected, str):
        want = Limit.parse(expected)
        ok = computed.kind == want.kind
        rows.append((name, str(want), str(computed), "", ok))
    else:
        _compare(rows, name, expected, computed.value if computed.kind != "infinite" else math.inf)


def reproduce_rows(k: int, solve: bool = True, n: int | None = None):
    """Comparison rows (quantity, expected, computed, rel_err, ok) for example ``k``."""
    spec = example(k)
    exp = EXPECTED[k]
    c = compute_constants(spec.params, spec.a)
    rows = []
    for key in ("gamma", "lambda1", "lambda2", "lambda2_over_gamma", "alpha_sup", "beta_sup"):
        if key in exp:
            _compare(rows, key, exp[key], getattr(c, key))
    if "gamma_branches" in exp:
        for i, (e, v) in enumerate(zip(exp["gamma_branches"], c.gamma_branches), 1):
            _compare(rows, f"gamma_branch{i}", e, v)
    asym = estimate_asymptotics(spec.f, spec.asymptotics)
    _compare_limit(rows, "f0", exp["f0"], asym.f0)
    _compare_limit(rows, "finf", exp["finf"], asym.f_inf)
    rep = evaluate(spec.f, c, asym, spec.rho1, spec.rho2)
    for name, stat in (("H2", "max"), ("H4", "min")):
        if f"{name}_{stat}" in exp:
            w = rep.witnesses[name]
            rows.append((f"{name} holds at rho={fmt(exp['rho'])}", "true", fmt(w.holds), "",
                         bool(w.holds and w.rho == exp["rho"])))
            _compare(rows, f"{name} {stat} f", exp[f"{name}_{stat}"], w.extremum)
            _compare(rows, f"{name} M", exp[f"{name}_M"], w.M)
    primary = primary_certificate(rep.certificates)
    got = primary.theorem if primary else "none"
    rows.append(("certificate", exp["theorem"], got, "", got == exp["theorem"]))
    if solve:
        report, _, buckets = run_solve(spec, n, rep.certificates)
        mine = [b for b in buckets.occupancy if b[0].startswith(exp["theorem"] + "[")]
        norms = ";".join(fmt(r.sup_norm) for r in report.solutions)
        for label, _, inside in mine:
            good = [i for i in inside if report.solutions[i].in_cone
                    and report.solutions[i].fixed_point_residual <= 1e-8]
            rows.append((f"solution in {label}", ">=1", str(len(good)), norms, bool(good)))
    return rows


def cmd_reproduce(args) -> int:
    if args.example not in EXPECTED:
        raise CliError(f"no built-in example {args.example}; choose 1..{len(EXPECTED)}", EXIT_PARSE)
    rows = reproduce_rows(args.example, solve=not args.no_solve, n=args.n)
    header = ("quantity", "expected", "computed", "rel_err/detail", "ok")
    table = [header] + [(q, e, c, d, "PASS" if ok else "FAIL") for q, e, c, d, ok in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        print("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
    failed = [r for r in rows if not r[4]]
    print(f"example {args.example}: {len(rows) - len(failed)}/{len(rows)} comparisons pass")
    return EXIT_MISMATCH if failed else EXIT_OK


# -- sweep -----------------------------------------------------------------------------


def parse_vary(text: str) -> tuple[str, np.ndarray]:
    """``name=lo:hi:steps`` -> (name, inclusive linspace)."""
    try:
        name, rng = text.split("=", 1)
        lo, hi, steps = rng.split(":")
        name = name.strip()
        lo_v, hi_v = parse_real(lo), parse_real(hi)
        n = int(steps)
    except (ValueError, SpecError) as exc:
        raise CliError(f"malformed --vary {text!r}; expected name=lo:hi:steps", EXIT_PARSE) from exc
    if name not in ("alpha", "beta", "eta", "T"):
        raise CliError(f"--vary: unknown parameter {name!r}", EXIT_PARSE)
    if n < 1:
        raise CliError(f"--vary {name}: empty sweep (steps={n})", EXIT_PARSE)
    return name, np.linspace(lo_v, hi_v, n)


def sweep_rows(spec: ProblemSpec, varies: list[tuple[str, np.ndarray]], certify_points: bool = True):
    names = [v[0] for v in varies]
    if len(set(names)) != len(names):
        raise CliError("--vary: a parameter is varied twice", EXIT_PARSE)
    asym = None
    if certify_points:
        try:
            asym = estimate_asymptotics(spec.f, spec.asymptotics)
        except InconclusiveAsymptoticsError as exc:
            raise CliError(f"inconclusive asymptotics: {exc}", EXIT_INCONCLUSIVE) from exc
    for combo in itertools.product(*(v[1] for v in varies)):
        point = spec.with_params(**{k: float(x) for k, x in zip(names, combo)})
        p = point.params
        row = {"alpha": fmt(p.alpha), "beta": fmt(p.beta), "eta": fmt(p.eta), "T": fmt(p.T),
               "admissible": "false", "gamma": "", "lambda1": "", "lambda2": "",
               "fired_certificates": ""}
        try:
            ok = check_nonexistence_region(p.alpha, p.beta, p.eta, p.T) == ADMISSIBLE
        except InvalidParamsError:
            ok = False
        if ok:
            try:
                c = compute_constants(p, point.a)
            except (DegenerateCoefficientError, ExprEvalError) as exc:
                log.info("point %s: %s", combo, exc)
                yield row
                continue
            row.update(admissible="true", gamma=fmt(c.gamma), lambda1=fmt(c.lambda1),
                       lambda2=fmt(c.lambda2))
            if certify_points:
                certs = evaluate(point.f, c, asym, point.rho1, point.rho2).certificates
                row["fired_certificates"] = ";".join(x.theorem for x in certs)
        yield row


def cmd_sweep(args) -> int:
    spec = _load(args.spec)
    varies = [parse_vary(v) for v in args.vary or []]
    rows = sweep_rows(spec, varies, certify_points=not args.no_certify)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# -- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nlbvp",
        description="Certify and solve u'' + a(t) f(u) = 0, u(0) = beta u(eta), "
                    "u(T) = alpha int_0^eta u.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def with_spec(name, help_text, porcelain=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("spec", help="problem file")
        if porcelain:
            p.add_argument("--porcelain", action="store_true", help="key=value output")
        return p

    with_spec("validate", "check the parameter window and coefficient signs").set_defaults(func=cmd_validate)
    with_spec("constants", "print gamma, Lambda1, Lambda2").set_defaults(func=cmd_constants)
    with_spec("certify", "list the existence certificates that fire").set_defaults(func=cmd_certify)
    p = with_spec("solve", "find positive fixed points")
    p.add_argument("--n", type=int, default=None, help="grid intervals (default 1024 or BVP_DEFAULT_GRID_N)")
    p.add_argument("--dump", metavar="DIR", help="write each solution to DIR/solution_<k>.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reproduce", help="check a built-in worked example against its reference values")
    p.add_argument("example", type=int, choices=sorted(EXPECTED))
    p.add_argument("--no-solve", action="store_true", help="skip the solver stage")
    p.add_argument("--n", type=int, default=None)
    p.set_defaults(func=cmd_reproduce)

    p = with_spec("sweep", "tabulate constants and certificates over a parameter grid", porcelain=False)
    p.add_argument("--vary", action="append", metavar="NAME=LO:HI:STEPS",
                   help="parameter range, inclusive; repeat for a Cartesian grid")
    p.add_argument("--out", help="CSV file (default stdout)")
    p.add_argument("--no-certify", action="store_true", help="leave fired_certificates empty")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_PARSE
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
