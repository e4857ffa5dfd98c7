import numpy as np
import pytest

from conftest import random_params
from nlbvp.builtin import example
from nlbvp.expr import parse, scaled
from nlbvp.linear_kernel import GridFunction, solve_linear
from nlbvp.operator import (
    OperatorContext, OperatorEvalError, apply_A, check_cone_mapping, fixed_point_residual,
    random_cone_element,
)


def test_matches_linear_solve():
    spec = example(4)
    ctx = OperatorContext.build(spec.params, spec.a, spec.f, 256)
    u = GridFunction.sample(ctx.mesh, lambda t: 1 + t)
    y = GridFunction(ctx.mesh, ctx.a_values * spec.f(u.values))
    assert np.allclose(apply_A(ctx, u).values, solve_linear(spec.params, y).values, rtol=1e-14, atol=0)


def test_f_scaling():
    rng = np.random.default_rng(4)
    f = parse("u^2 + sqrt(u)", "u")
    a = parse("1 + t", "t")
    for _ in range(20):
        p = random_params(rng)
        c = float(rng.uniform(0.1, 10))
        ctx1 = OperatorContext.build(p, a, f, 128)
        ctx2 = OperatorContext.build(p, a, scaled(f, c), 128)
        u = random_cone_element(ctx1, rng)
        lhs = apply_A(ctx2, u).values
        rhs = c * apply_A(ctx1, u).values
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)


def test_grid_convergence():
    spec = example(1)
    probe = lambda t: 1 + np.sin(t)
    vals = []
    for n in (64, 128, 256, 512):
        ctx = OperatorContext.build(spec.params, spec.a, spec.f, n)
        Au = apply_A(ctx, GridFunction.sample(ctx.mesh, probe))
        vals.append(Au(np.linspace(0, spec.params.T, 9)))
    d = [np.max(np.abs(vals[i + 1] - vals[i])) for i in range(3)]
    assert np.log2(d[0] / d[1]) >= 2 and np.log2(d[1] / d[2]) >= 2


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_cone_mapping_examples(k):
    spec = example(k)
    ctx = OperatorContext.build(spec.params, spec.a, spec.f, 256)
    rep = check_cone_mapping(ctx, 100, seed=k)
    assert rep.all_passed, rep.failures
    assert rep.worst_nonneg_margin >= -1e-10


def test_cone_mapping_reports_failures():
    spec = example(4)
    ctx = OperatorContext.build(spec.params, spec.a, spec.f, 64)
    bad = GridFunction.sample(ctx.mesh, lambda t: np.zeros_like(t))
    rep = check_cone_mapping(ctx, 1, samples=[bad])
    assert rep.all_passed   # A0 = 0 is in the cone
    neg = OperatorContext.build(spec.params, spec.a, parse("u - 1", "u"), 64)
    rep = check_cone_mapping(neg, 1, samples=[GridFunction.constant(neg.mesh, 0.5)])
    assert not rep.all_passed and rep.failures == (0,)


def test_negative_values_are_clamped_and_counted():
    spec = example(4)
    ctx = OperatorContext.build(spec.params, spec.a, spec.f, 64)
    u = GridFunction.sample(ctx.mesh, lambda t: t - 0.25)
    apply_A(ctx, u)
    assert ctx.clamp_events and ctx.clamp_events[-1] > 0


def test_eval_error_names_node():
    spec = example(4)
    ctx = OperatorContext.build(spec.params, spec.a, parse("exp(u)", "u"), 64)
    u = GridFunction.sample(ctx.mesh, lambda t: 1000 * t)
    with pytest.raises(OperatorEvalError) as ei:
        fixed_point_residual(ctx, u)
    assert ei.value.node is not None and ei.value.u_value == u.values[ei.value.node]
