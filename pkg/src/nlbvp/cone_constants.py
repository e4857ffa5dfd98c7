"""The cone constant gamma, the thresholds Lambda1/Lambda2 and the sign checks on a, f."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linear_kernel import BvpParams
from .quadrature import DEFAULT_REL_TOL, integrate_adaptive

DEFAULT_U_PROBE_MAX = 1e6
COEFF_SAMPLES = 4096


class DegenerateCoefficientError(ValueError):
    """A weighted integral of a(t) vanishes, so a threshold is undefined."""

    def __init__(self, message: str, condition: str = "B2"):
        self.condition = condition
        super().__init__(message)


@dataclass(frozen=True)
class ConeConstants:
    gamma: float
    lambda1: float
    lambda2: float
    alpha_sup: float
    beta_sup: float
    gamma_branches: tuple[float, float, float] = (np.nan, np.nan, np.nan)

    @property
    def lambda2_over_gamma(self) -> float:
        return self.lambda2 / self.gamma


def gamma_branches(params: BvpParams) -> tuple[float, float, float]:
    a, b, e, T = params.alpha, params.beta, params.eta, params.T
    third_den = 2 * T - a * (b + 1) * e**2
    if third_den <= 0:
        raise AssertionError(f"third gamma branch has denominator {third_den} <= 0")
    return (e / T, a * (b + 1) * e**2 / (2 * T), a * (b + 1) * e * (T - e) / third_den)


def gamma(params: BvpParams) -> float:
    params.validate()
    g = min(gamma_branches(params))
    assert 0 < g < 1, g
    return g


def _weighted_integral(a: Callable, weight: Callable, lo: float, hi: float, rel_tol: float) -> float:
    return integrate_adaptive(lambda s: weight(s) * a(s), lo, hi, rel_tol=rel_tol).value


def lambda1(params: BvpParams, a: Callable, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Numerator over [2(b+1) + b e (a e + 2)/T + a b T] * int_0^T T(T-s) a(s) ds."""
    params.validate()
    al, b, e, T = params.alpha, params.beta, params.eta, params.T
    num = params.numerator
    assert num > 0
    integral = _weighted_integral(a, lambda s: T * (T - s), 0.0, T, rel_tol)
    if integral <= 0:
        raise DegenerateCoefficientError(
            f"int_0^T T(T-s)a(s)ds = {integral:g}; a vanishes on [0, T]")
    bracket = 2 * (b + 1) + b * e * (al * e + 2) / T + al * b * T
    return num / (bracket * integral)


def lambda2(params: BvpParams, a: Callable, gamma_value: float | None = None,
            rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Numerator over 2 gamma eta int_eta^T (T-s) a(s) ds."""
    params.validate()
    if gamma_value is None:
        gamma_value = gamma(params)
    e, T = params.eta, params.T
    num = params.numerator
    assert num > 0
    integral = _weighted_integral(a, lambda s: T - s, e, T, rel_tol)
    if integral <= 0:
        raise DegenerateCoefficientError(
            f"int_eta^T (T-s)a(s)ds = {integral:g}; (B2) fails: a is not positive "
            "anywhere on [eta, T]")
    return num / (2 * gamma_value * e * integral)


def compute_constants(params: BvpParams, a: Callable, rel_tol: float = DEFAULT_REL_TOL) -> ConeConstants:
    params.validate()
    branches = gamma_branches(params)
    g = min(branches)
    return ConeConstants(
        gamma=g,
        lambda1=lambda1(params, a, rel_tol),
        lambda2=lambda2(params, a, g, rel_tol),
        alpha_sup=params.alpha_sup,
        beta_sup=params.beta_sup,
        gamma_branches=branches,
    )


@dataclass(frozen=True)
class CoefficientCheck:
    a_nonneg: bool
    a_positive_somewhere_on_tail: bool
    f_nonneg: bool
    evidence: str = "sampled, not proven"

    @property
    def ok(self) -> bool:
        return self.a_nonneg and self.a_positive_somewhere_on_tail and self.f_nonneg


def probe_points(u_max: float, count: int = COEFF_SAMPLES) -> np.ndarray:
    """Log-spaced plus linear-spaced points in (0, u_max]."""
    half = count // 2
    lo = min(1e-12, u_max * 1e-12)
    logs = np.geomspace(lo, u_max, half)
    lins = np.linspace(u_max / (count - half), u_max, count - half)
    return np.unique(np.concatenate([logs, lins]))


def check_coefficients(a: Callable, f: Callable, params: BvpParams,
                       u_probe_max: float = DEFAULT_U_PROBE_MAX) -> CoefficientCheck:
    """Sample a on [0, T] and f on (0, u_probe_max] for the sign conditions.

    Evaluation errors (domain, overflow) propagate with the offending point.
    """
    t = np.linspace(0.0, params.T, COEFF_SAMPLES)
    av = np.broadcast_to(a(t), t.shape)
    tail = t >= params.eta
    u = np.concatenate([[0.0], probe_points(u_probe_max)])
    fv = np.broadcast_to(f(u), u.shape)
    return CoefficientCheck(
        a_nonneg=bool(np.all(av >= 0)),
        a_positive_somewhere_on_tail=bool(np.any(av[tail] > 0)),
        f_nonneg=bool(np.all(fv >= 0)),
    )
