"""The nine acceptance criteria, one test each, each printing a PASS/FAIL line."""
import time

import numpy as np

from conftest import random_params, random_smooth_y, report_criterion, solved_example
from nlbvp import cli
from nlbvp.builtin import EXPECTED, example
from nlbvp.cone_constants import compute_constants, gamma
from nlbvp.criteria import check_H2, check_H4, estimate_asymptotics
from nlbvp.expr import parse, scaled
from nlbvp.linear_kernel import (
    NO_POSITIVE_SOLUTION, GridFunction, check_cone_bound, check_nonexistence_region,
    fd_oracle_solve, make_mesh, solve_linear,
)
from nlbvp.operator import OperatorContext, apply_A, check_cone_mapping, random_cone_element

REL = 1e-9


def rel_err(got, want):
    want = float(want)
    return abs(got - want) / abs(want)


def test_criterion_1_constants():
    worst = 0.0
    t0 = time.perf_counter()
    checks = {1: ("lambda1",), 2: ("gamma", "lambda2"), 3: ("gamma", "lambda1", "lambda2"),
              4: ("gamma", "lambda1", "lambda2")}
    limits_ok = True
    for k, keys in checks.items():
        spec = example(k)
        c = compute_constants(spec.params, spec.a)
        for key in keys:
            worst = max(worst, rel_err(getattr(c, key), EXPECTED[k][key]))
        if k in (3, 4):
            a = estimate_asymptotics(spec.f)
            for lim, key in ((a.f0, "f0"), (a.f_inf, "finf")):
                limits_ok &= lim.kind == "finite"
                worst = max(worst, rel_err(lim.value, EXPECTED[k][key]))
    elapsed = time.perf_counter() - t0
    ok = limits_ok and worst <= REL and elapsed < 1.0
    report_criterion(1, ok, f"worst rel err {worst:.2e} (tol {REL:g}), {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_2_witnesses():
    s1, s2 = example(1), example(2)
    c1 = compute_constants(s1.params, s1.a)
    c2 = compute_constants(s2.params, s2.a)
    h2 = check_H2(s1.f, c1.lambda1, 4.0)
    h4 = check_H4(s2.f, c2.lambda2, c2.gamma, 6.0)
    errs = [rel_err(h2.extremum, 1.5), rel_err(h2.M, 3 / 8), rel_err(h4.extremum, 36), rel_err(h4.M, 6)]
    ok = h2.holds and h4.holds and max(errs) <= REL and h2.M <= c1.lambda1 and h4.M >= c2.lambda2
    report_criterion(2, ok, f"H2(rho=4) max f={h2.extremum:.12g} M={h2.M:.12g}; "
                            f"H4(rho=6) min f={h4.extremum:.12g} M={h4.M:.12g}; worst rel err {max(errs):.1e}")
    assert ok


def test_criterion_3_routing():
    want = {1: "Thm3.1", 2: "Thm3.2", 3: "Cor4.2", 4: "Cor4.3"}
    got = {}
    for k in want:
        row = next(r for r in cli.reproduce_rows(k, solve=False) if r[0] == "certificate")
        got[k] = row[2]
    ok = got == want
    report_criterion(3, ok, ", ".join(f"reproduce {k} -> {got[k]}" for k in sorted(got)))
    assert ok


def test_criterion_4_localization():
    details = []
    ok = True
    for k, rho in ((1, 4.0), (2, 6.0), (3, None), (4, None)):
        report, _, _, secs = solved_example(k)
        good = [r for r in report if r.in_cone and r.fixed_point_residual <= 1e-8 and r.sup_norm > 0]
        norms = sorted(r.sup_norm for r in good)
        if rho is None:
            this = len(good) >= 1
        else:
            this = any(x < rho for x in norms) and any(x > rho for x in norms)
        this &= secs < 30
        ok &= this
        details.append(f"ex{k} norms {[float(f'{x:.6g}') for x in norms]} in {secs:.1f}s")
    report_criterion(4, ok, "; ".join(details))
    assert ok


def test_criterion_5_positivity_and_cone():
    rng = np.random.default_rng(55)
    failures = 0
    for _ in range(200):
        p = random_params(rng)
        mesh = make_mesh(p.eta, p.T, 512)
        u = solve_linear(p, GridFunction.sample(mesh, random_smooth_y(rng, p.T)))
        tol = 1e-10 * (1 + u.sup_norm())
        if u.values.min() < -tol or not check_cone_bound(p, u, gamma(p)).holds:
            failures += 1
    ok = failures == 0
    report_criterion(5, ok, f"{failures} failures in 200 random instances")
    assert ok


def test_criterion_6_oracle():
    rng = np.random.default_rng(66)
    ratios = []
    for _ in range(20):
        p = random_params(rng)
        y = random_smooth_y(rng, p.T)
        errs = []
        for n in (120, 240):
            fd = fd_oracle_solve(p, y, n)
            exact = solve_linear(p, GridFunction.sample(fd.mesh, y))
            errs.append(np.max(np.abs(fd.values - exact.values)))
        ratios.append(errs[0] / errs[1])
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    report_criterion(6, ok, f"error ratios in [{min(ratios):.3f}, {max(ratios):.3f}] over 20 instances")
    assert ok


def test_criterion_7_cone_mapping():
    parts = []
    ok = True
    for k in (1, 2, 3, 4):
        spec = example(k)
        ctx = OperatorContext.build(spec.params, spec.a, spec.f)
        rep = check_cone_mapping(ctx, 100, seed=70 + k)
        ok &= rep.all_passed
        parts.append(f"ex{k} {rep.passed}/100")
    report_criterion(7, ok, ", ".join(parts))
    assert ok


def test_criterion_8_scaling():
    rng = np.random.default_rng(88)
    a = parse("1 + t*t/2", "t")
    f = parse("u^2/(1 + u) + sqrt(u)", "u")
    worst = 0.0
    gamma_fixed = True
    for _ in range(20):
        p = random_params(rng)
        c = float(rng.uniform(0.1, 10))
        base = compute_constants(p, a)
        sc = compute_constants(p, scaled(a, c))
        gamma_fixed &= sc.gamma == base.gamma
        worst = max(worst, rel_err(sc.lambda1, base.lambda1 / c), rel_err(sc.lambda2, base.lambda2 / c))
        ctx = OperatorContext.build(p, a, f, 256)
        ctx_c = OperatorContext.build(p, a, scaled(f, c), 256)
        u = random_cone_element(ctx, rng, float(rng.uniform(0.1, 10)))
        Au, Acu = apply_A(ctx, u).values, apply_A(ctx_c, u).values
        worst = max(worst, float(np.max(np.abs(Acu - c * Au)) / np.max(np.abs(c * Au))))
    ok = gamma_fixed and worst <= 1e-12
    report_criterion(8, ok, f"worst rel err {worst:.2e} (tol 1e-12), gamma unchanged: {gamma_fixed}")
    assert ok


def test_criterion_9_nonexistence_gate(tmp_path, capsys):
    rng = np.random.default_rng(99)
    bad = []
    for i in range(20):
        T = float(rng.uniform(0.5, 3))
        eta = float(rng.uniform(0.1, 0.9)) * T
        alpha = 2 * T / eta**2 * float(rng.uniform(1.001, 3))
        beta = float(rng.uniform(0, 2))
        path = tmp_path / f"p{i}.bvp"
        path.write_text(f"[params]\nalpha = {alpha!r}\nbeta = {beta!r}\neta = {eta!r}\nT = {T!r}\n"
                        '[functions]\na = "1"\nf = "u^2"\n')
        code = cli.main(["validate", "--porcelain", str(path)])
        out = capsys.readouterr().out
        cls = check_nonexistence_region(alpha, beta, eta, T)
        if code != 1 or "classification=no_positive_solution" not in out or cls != NO_POSITIVE_SOLUTION:
            bad.append(i)
    ok = not bad
    report_criterion(9, ok, f"{20 - len(bad)}/20 specs with alpha > 2T/eta^2 rejected with exit 1")
    assert ok
