"""The Hammerstein operator whose fixed points solve the nonlinear problem.

A u = L(a * f(u)), where L is the closed-form linear solution operator in
``linear_kernel``.  Fixed points of A are exactly the solutions of
u'' + a(t) f(u) = 0 with the nonlocal boundary conditions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .cone_constants import gamma as cone_gamma
from .expr import ExprEvalError
from .linear_kernel import (
    NONNEG_TOL,
    BvpParams,
    GridFunction,
    Mesh,
    check_cone_bound,
    green_apply,
    green_matrix,
    make_mesh,
)

log = logging.getLogger(__name__)


class OperatorEvalError(ValueError):
    def __init__(self, message: str, node: int | None = None, u_value: float | None = None):
        self.node = node
        self.u_value = u_value
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class OperatorContext:
    params: BvpParams
    a: Callable
    f: Callable
    mesh: Mesh
    clamp_events: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        self.params.validate()
        if self.mesh.eta != self.params.eta or self.mesh.T != self.params.T:
            raise ValueError("mesh must cover [0, T] with eta as a node")

    @classmethod
    def build(cls, params: BvpParams, a: Callable, f: Callable, n: int | None = None) -> "OperatorContext":
        return cls(params, a, f, make_mesh(params.eta, params.T, n))

    @cached_property
    def a_values(self) -> np.ndarray:
        t = self.mesh.nodes
        return np.broadcast_to(np.asarray(self.a(t), dtype=float), t.shape).copy()

    @cached_property
    def gamma(self) -> float:
        return cone_gamma(self.params)

    @cached_property
    def green(self) -> np.ndarray:
        return green_matrix(self.params, self.mesh)

    def with_mesh(self, n: int) -> "OperatorContext":
        return OperatorContext.build(self.params, self.a, self.f, n)


def eval_f(ctx: OperatorContext, u: np.ndarray) -> np.ndarray:
    """f on nodal values; negative entries are evaluated as f(0) and counted."""
    neg = u < 0
    if np.any(neg):
        count = int(np.count_nonzero(neg))
        ctx.clamp_events.append(count)
        log.debug("clamped %d negative nodal values before evaluating f", count)
        u = np.where(neg, 0.0, u)
    try:
        fv = ctx.f(u)
    except ExprEvalError as exc:
        node = None
        if exc.value is not None:
            hits = np.flatnonzero(u == exc.value)
            node = int(hits[0]) if hits.size else None
        raise OperatorEvalError(f"f failed at node {node}, u={exc.value!r}: {exc}",
                                node, exc.value) from exc
    return np.broadcast_to(np.asarray(fv, dtype=float), u.shape)


def integrand(ctx: OperatorContext, u: GridFunction) -> np.ndarray:
    """w = a * f(u) on the nodes."""
    return ctx.a_values * eval_f(ctx, u.values)


def apply_A(ctx: OperatorContext, u: GridFunction) -> GridFunction:
    if u.mesh != ctx.mesh:
        raise ValueError("u is not sampled on the context mesh")
    w = integrand(ctx, u)
    return GridFunction(ctx.mesh, green_apply(ctx.params, ctx.mesh, w))


def fixed_point_residual(ctx: OperatorContext, u: GridFunction) -> float:
    return float(np.max(np.abs(apply_A(ctx, u).values - u.values)))


@dataclass(frozen=True)
class ConeMappingReport:
    samples: int
    passed: int
    worst_nonneg_margin: float   # min over samples of min(Au)/(1+|Au|)
    worst_cone_margin: float     # min over samples of (tail_min - gamma*|Au|)/(1+|Au|)
    failures: tuple = ()

    @property
    def all_passed(self) -> bool:
        return self.passed == self.samples


def random_cone_element(ctx: OperatorContext, rng: np.random.Generator, scale: float = 1.0) -> GridFunction:
    """A random smooth element of the cone K on the context mesh.

    v is a random trigonometric polynomial, shifted to start at 0 and lifted by a
    constant large enough that the tail minimum dominates gamma times the norm.
    """
    t = ctx.mesh.nodes / ctx.params.T
    k = np.arange(1, 6)
    coef = rng.normal(size=k.size) / k
    phase = rng.uniform(0, 2 * np.pi, size=k.size)
    v = np.sin(np.pi * np.outer(t, k) + phase) @ coef
    w = v - v.min()
    g = ctx.gamma
    lift = g * w.max() / (1 - g) * (1 + rng.uniform(0.0, 1.0))
    u = scale * (lift + w) / max(lift + w.max(), 1e-300)
    cu = GridFunction(ctx.mesh, u)
    rep = check_cone_bound(ctx.params, cu, g, tol_abs=0.0)
    assert rep.holds and np.all(u >= 0), "constructed sample left the cone"
    return cu


def check_cone_mapping(ctx: OperatorContext, sample_count: int, seed: int = 0,
                       scale_range: tuple[float, float] = (1e-2, 1e2),
                       samples: list[GridFunction] | None = None) -> ConeMappingReport:
    """Map random cone elements through A and check that the images stay in the cone.

    Failures are reported, not raised.  ``samples`` overrides the random draws.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    if samples is None:
        lo, hi = np.log(scale_range[0]), np.log(scale_range[1])
        samples = [random_cone_element(ctx, rng, float(np.exp(rng.uniform(lo, hi))))
                   for _ in range(sample_count)]
    g = ctx.gamma
    passed = 0
    worst_nonneg = np.inf
    worst_cone = np.inf
    failures = []
    for i, u in enumerate(samples):
        Au = apply_A(ctx, u)
        norm = Au.sup_norm()
        scale = 1.0 + norm
        nonneg = float(Au.values.min()) / scale
        cone = (Au.tail_min() - g * norm) / scale
        worst_nonneg = min(worst_nonneg, nonneg)
        worst_cone = min(worst_cone, cone)
        if nonneg >= -NONNEG_TOL and cone >= -NONNEG_TOL:
            passed += 1
        else:
            failures.append(i)
    return ConeMappingReport(len(samples), passed, worst_nonneg, worst_cone, tuple(failures))
