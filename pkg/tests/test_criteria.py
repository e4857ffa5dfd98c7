import numpy as np
import pytest

from nlbvp.builtin import EXPECTED, example
from nlbvp.cone_constants import ConeConstants, compute_constants
from nlbvp.criteria import (
    AsymptoticEstimate, InconclusiveAsymptoticsError, Limit, asymptotic_hypotheses, certify,
    certify_report, check_H2, check_H4, estimate_asymptotics, evaluate, primary_certificate,
    search_rho,
)
from nlbvp.expr import parse, scaled


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sampled_asymptotics_examples(k):
    a = estimate_asymptotics(example(k).f)
    assert not a.declared
    for got, want in ((a.f0, EXPECTED[k]["f0"]), (a.f_inf, EXPECTED[k]["finf"])):
        if isinstance(want, str):
            assert got == Limit.parse(want)
        else:
            assert got.value == pytest.approx(float(want), rel=1e-9)


@pytest.mark.parametrize("src, f0, finf", [
    ("u^2", "0", "inf"), ("sqrt(u)", "inf", "0"), ("3*u", 3.0, 3.0),
    ("u*(2 + sin(1/(1+u)))", None, 2.0),
    ("u/(1+u)", 1.0, "0"),
])
def test_classify_synthetic(src, f0, finf):
    a = estimate_asymptotics(parse(src, "u"))
    for got, want in ((a.f0, f0), (a.f_inf, finf)):
        if want is None:
            continue
        if isinstance(want, str):
            assert got == Limit.parse(want)
        else:
            assert got.value == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("src", ["u*(2 + sin(log(u)))", "u/log(2+u)"])
def test_unsettled_ratio_is_inconclusive(src):
    # oscillation, and a logarithmic decay too slow to separate from a constant
    with pytest.raises(InconclusiveAsymptoticsError):
        estimate_asymptotics(parse(src, "u"))


def test_declared_asymptotics_used_verbatim():
    a = estimate_asymptotics(parse("u*(2 + sin(log(u)))", "u"), ("inf", "1/2"))
    assert a.declared and a.f0.kind == "infinite" and a.f_inf.value == 0.5


def test_H2_example1():
    spec = example(1)
    c = compute_constants(spec.params, spec.a)
    w = check_H2(spec.f, c.lambda1, 4.0)
    assert w.holds
    assert w.extremum == pytest.approx(1.5, rel=1e-9)
    assert w.M == pytest.approx(3 / 8, rel=1e-9)
    assert w.M <= c.lambda1


def test_H4_example2():
    spec = example(2)
    c = compute_constants(spec.params, spec.a)
    w = check_H4(spec.f, c.lambda2, c.gamma, 6.0)
    assert w.holds
    assert w.extremum == pytest.approx(36, rel=1e-9)
    assert w.M == pytest.approx(6, rel=1e-9)


def test_H2_fails_above_bound():
    f = parse("u", "u")
    assert not check_H2(f, 0.5, 1.0).holds
    assert check_H2(f, 1.0, 1.0).holds and check_H2(f, 1.0, 1.0).marginal


def test_search_rho_smallest_passing():
    spec = example(1)
    c = compute_constants(spec.params, spec.a)
    w = search_rho(spec.f, "H2", c, 1e-2, 1e2, count=50)
    assert w is not None and w.holds
    grid = np.geomspace(1e-2, 1e2, 50)
    earlier = [r for r in grid if r < w.rho]
    assert all(not check_H2(spec.f, c.lambda1, float(r)).holds for r in earlier)
    assert search_rho(parse("u", "u"), "H2", ConeConstants(0.5, 0.5, 1, 1, 1), 1e-2, 1e2) is None


def test_theta_elimination_both_directions():
    rng = np.random.default_rng(17)
    for _ in range(50):
        lam1 = float(rng.uniform(0.01, 10))
        lam2 = float(rng.uniform(0.01, 10))
        g = float(rng.uniform(0.05, 0.95))
        c = ConeConstants(g, lam1, lam2, 1.0, 1.0)
        f0 = float(rng.uniform(0, 2 * lam1))
        finf = float(rng.uniform(0, 2 * lam2 / g))
        asym = AsymptoticEstimate(Limit.finite(f0), Limit.finite(finf), True)
        h = asymptotic_hypotheses(asym, c)
        assert h["H5"].holds == (f0 < lam1)
        if h["H5"].holds:
            th = h["H5"].theta
            assert 0 < th <= 1 and f0 < th * lam1
        assert h["H6"].holds == (finf > lam2 / g)
        if h["H6"].holds:
            th = h["H6"].theta
            assert th >= 1 and finf > th * lam2 / g
    c = ConeConstants(0.5, 1.0, 1.0, 1.0, 1.0)
    h = asymptotic_hypotheses(AsymptoticEstimate(Limit.zero(), Limit.infinite(), True), c)
    assert h["H5"].holds and h["H6"].holds and h["D1"].holds


def test_f_scaling_equivalence():
    rng = np.random.default_rng(23)
    spec = example(1)
    c = compute_constants(spec.params, spec.a)
    for _ in range(20):
        rho = float(rng.uniform(0.5, 10))
        k = float(rng.uniform(0.1, 3))
        w = check_H2(spec.f, c.lambda1, rho)
        wk = check_H2(scaled(spec.f, k), c.lambda1, rho)
        assert wk.extremum == pytest.approx(k * w.extremum, rel=1e-12)
        S = k * w.extremum
        if abs(S - c.lambda1 * rho) > 1e-6 * S:
            assert wk.holds == (S <= c.lambda1 * rho)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_certificates_and_primary(k):
    spec = example(k)
    certs = certify(spec, compute_constants(spec.params, spec.a))
    names = [c.theorem for c in certs]
    assert EXPECTED[k]["theorem"] in names
    assert primary_certificate(certs).theorem == EXPECTED[k]["theorem"]
    assert "Thm1.1-D1" not in names and "Thm1.1-D2" not in names


def test_example1_summary_text():
    spec = example(1)
    certs = certify(spec, compute_constants(spec.params, spec.a))
    assert certs[0].summary() == "Thm3.1: two solutions, 0<|u1|<4<|u2|"


def test_example3_summary_text():
    spec = example(3)
    cert = primary_certificate(certify(spec, compute_constants(spec.params, spec.a)))
    assert cert.summary() == "Cor4.2: at least one solution"


def test_zero_f_fires_nothing():
    spec = example(4)
    spec = type(spec)(spec.params, spec.a, parse("0", "u"),
                      asymptotics=(Limit.zero(), Limit.zero()))
    assert certify(spec, compute_constants(spec.params, spec.a)) == []


def test_thm41_needs_distinct_rhos():
    spec = example(1)
    c = compute_constants(spec.params, spec.a)
    rep = certify_report(spec, c)
    h2, h4 = rep.witnesses["H2"], rep.witnesses["H4"]
    assert h2.rho != h4.rho
    thm41 = [x for x in rep.certificates if x.theorem == "Thm4.1"]
    assert thm41 and thm41[0].norm_localization == ((min(h2.rho, h4.rho), max(h2.rho, h4.rho)),)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_witnesses_stable_at_double_resolution(k):
    spec = example(k)
    c = compute_constants(spec.params, spec.a)
    rep = certify_report(spec, c)
    for cert in rep.certificates:
        for w in cert.witnesses:
            if w.name == "H2":
                assert check_H2(spec.f, c.lambda1, w.rho, nodes=8192).holds
            elif w.name == "H4":
                assert check_H4(spec.f, c.lambda2, c.gamma, w.rho, nodes=8192).holds


def test_inconclusive_propagates_from_certify():
    spec = example(4)
    spec = type(spec)(spec.params, spec.a, parse("u*(2 + sin(log(u)))", "u"))
    with pytest.raises(InconclusiveAsymptoticsError):
        certify(spec, compute_constants(spec.params, spec.a))


def test_evaluate_with_given_asymptotics():
    spec = example(3)
    c = compute_constants(spec.params, spec.a)
    asym = AsymptoticEstimate(Limit.finite(61 / 213), Limit.finite(183), True)
    names = [x.theorem for x in evaluate(spec.f, c, asym).certificates]
    assert "Cor4.2" in names
