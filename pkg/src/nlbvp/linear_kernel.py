"""Linear problem u'' + y = 0, u(0) = beta*u(eta), u(T) = alpha * int_0^eta u.

``solve_linear`` evaluates the closed-form solution operator with Simpson
quadrature on a mesh that has ``eta`` as a node; ``fd_oracle_solve`` is an
independent second-order finite-difference discretization used to check it.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .quadrature import UniformGrid, cumulative_simpson, simpson

DEFAULT_GRID_N = 1024
NONNEG_TOL = 1e-10


def default_grid_n() -> int:
    env = os.environ.get("BVP_DEFAULT_GRID_N")
    if env:
        n = int(env)
        if n < 4:
            raise ValueError(f"BVP_DEFAULT_GRID_N must be >= 4, got {n}")
        return n
    return DEFAULT_GRID_N


class InvalidParamsError(ValueError):
    pass


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BvpParams:
    alpha: float
    beta: float
    eta: float
    T: float

    @property
    def alpha_sup(self) -> float:
        return 2.0 * self.T / self.eta**2

    @property
    def beta_sup(self) -> float:
        a, e, T = self.alpha, self.eta, self.T
        return (2 * T - a * e**2) / (a * e**2 - 2 * e + 2 * T)

    @property
    def denominator(self) -> float:
        """D = (alpha eta^2 - 2T) - beta (2 eta - alpha eta^2 - 2T), as printed."""
        a, b, e, T = self.alpha, self.beta, self.eta, self.T
        return (a * e**2 - 2 * T) - b * (2 * e - a * e**2 - 2 * T)

    @property
    def numerator(self) -> float:
        """(2T - alpha eta^2) - beta (alpha eta^2 - 2 eta + 2T), which equals -D."""
        a, b, e, T = self.alpha, self.beta, self.eta, self.T
        return (2 * T - a * e**2) - b * (a * e**2 - 2 * e + 2 * T)

    def violations(self) -> list[str]:
        out = []
        if not all(math.isfinite(v) for v in (self.alpha, self.beta, self.eta, self.T)):
            return ["parameters must be finite"]
        if not 0 < self.eta < self.T:
            return [f"need 0 < eta < T (eta={self.eta}, T={self.T})"]
        if not 0 < self.alpha < self.alpha_sup:
            out.append(f"need 0 < alpha < 2T/eta^2 = {self.alpha_sup:.12g} (alpha={self.alpha})")
        elif not 0 <= self.beta < self.beta_sup:
            out.append(f"need 0 <= beta < {self.beta_sup:.12g} (beta={self.beta})")
        return out

    def is_valid(self) -> bool:
        return not self.violations()

    def validate(self) -> "BvpParams":
        problems = self.violations()
        if problems:
            raise InvalidParamsError("; ".join(problems))
        assert self.numerator > 0 and self.denominator < 0, "sign of D inconsistent"
        return self


# -- mesh and grid functions ----------------------------------------------------


@dataclass(frozen=True)
class Mesh:
    """Two uniform pieces, [0, eta] and [eta, T], each with an even panel count."""

    eta: float
    T: float
    n_left: int
    n_right: int

    @property
    def left(self) -> UniformGrid:
        return UniformGrid(0.0, self.eta, self.n_left)

    @property
    def right(self) -> UniformGrid:
        return UniformGrid(self.eta, self.T, self.n_right)

    @property
    def n(self) -> int:
        return self.n_left + self.n_right

    @property
    def k_eta(self) -> int:
        return self.n_left

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([self.left.nodes, self.right.nodes[1:]])

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h(self) -> float:
        return max(self.left.h, self.right.h)

    def integral(self, values):
        """Simpson integral over [0, T] of nodal values (1-D or column batch)."""
        v = np.asarray(values, dtype=float)
        k = self.k_eta
        return simpson(v[: k + 1], self.left) + simpson(v[k:], self.right)

    def integral_left(self, values):
        v = np.asarray(values, dtype=float)
        return simpson(v[: self.k_eta + 1], self.left)

    def integral_right(self, values):
        v = np.asarray(values, dtype=float)
        return simpson(v[self.k_eta :], self.right)

    def cumulative(self, values) -> np.ndarray:
        """Running integral from 0 to every node."""
        v = np.asarray(values, dtype=float)
        k = self.k_eta
        left = cumulative_simpson(v[: k + 1], self.left)
        right = cumulative_simpson(v[k:], self.right, initial=0.0) + left[k]
        return np.concatenate([left, right[1:]])


def make_mesh(eta: float, T: float, n: int | None = None) -> Mesh:
    """Mesh with about ``n`` panels and ``eta`` exactly on a node.

    When eta/T is a ratio p/q with q <= 64 the total is rounded to a multiple
    of 2q so both pieces share one spacing; otherwise the spacings differ
    slightly.
    """
    if n is None:
        n = default_grid_n()
    if not 0 < eta < T:
        raise InvalidParamsError(f"need 0 < eta < T (eta={eta}, T={T})")
    ratio = eta / T
    frac = Fraction(ratio).limit_denominator(64)
    if abs(float(frac) - ratio) <= 1e-12 * ratio:
        p, q = frac.numerator, frac.denominator
        m = max(1, round(n / (2 * q)))
        return Mesh(eta, T, 2 * m * p, 2 * m * (q - p))
    n_left = max(2, 2 * round(n * ratio / 2))
    n_right = max(2, 2 * round((n - n_left) / 2))
    return Mesh(eta, T, n_left, n_right)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal samples of a continuous function on a ``Mesh``."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape[0] != self.mesh.n + 1:
            raise ValueError(f"expected {self.mesh.n + 1} values, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, mesh: Mesh, func: Callable) -> "GridFunction":
        t = mesh.nodes
        return cls(mesh, np.broadcast_to(np.asarray(func(t), dtype=float), t.shape).copy())

    @classmethod
    def constant(cls, mesh: Mesh, c: float) -> "GridFunction":
        return cls(mesh, np.full(mesh.n + 1, float(c)))

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def tail_min(self) -> float:
        """Minimum over the nodes in [eta, T]."""
        return float(np.min(self.values[self.mesh.k_eta :]))

    def __call__(self, t):
        return np.interp(t, self.nodes, self.values)


YLike = Union[GridFunction, Callable, np.ndarray]


def _check_mesh(params: BvpParams, mesh: Mesh):
    if not (math.isclose(mesh.eta, params.eta, rel_tol=1e-14)
            and math.isclose(mesh.T, params.T, rel_tol=1e-14)):
        raise InvalidParamsError("mesh does not match (eta, T) of the parameters")


def _window_check(params: BvpParams, allow_outside_window: bool):
    if allow_outside_window:
        if not 0 < params.eta < params.T:
            raise InvalidParamsError("need 0 < eta < T")
        if params.denominator == 0:
            raise InvalidParamsError("beta hits the singular value (2T-a e^2)/(a e^2-2e+2T)")
    else:
        params.validate()


def green_apply(params: BvpParams, mesh: Mesh, y: np.ndarray) -> np.ndarray:
    """Closed-form solution operator applied to nodal values ``y``.

    ``y`` may be (N,) or (N, k); columns are independent right-hand sides.
    """
    a, b, e, T = params.alpha, params.beta, params.eta, params.T
    D = params.denominator
    t = mesh.nodes
    tt = t if y.ndim == 1 else t[:, None]
    k = mesh.k_eta

    W = mesh.cumulative(y)          # int_0^t y
    S = mesh.cumulative(tt * y)     # int_0^t s y
    volterra = tt * W - S           # int_0^t (t-s) y
    P = volterra[k]                 # int_0^eta (eta-s) y
    R = volterra[-1]                # int_0^T (T-s) y
    Q = mesh.integral_left(((e - tt) ** 2 * y)[: k + 1])

    c_P = (b * (2 * T - a * e**2) - 2 * b * (1 - a * e) * tt) / D
    c_Q = (a * b * e - a * (b - 1) * tt) / D
    c_R = (2 * (b - 1) * tt - 2 * b * e) / D
    return c_P * P + c_Q * Q + c_R * R - volterra


def _values_on(mesh: Mesh, y: YLike) -> np.ndarray:
    if isinstance(y, GridFunction):
        if y.mesh == mesh:
            return y.values
        return y(mesh.nodes)
    if callable(y):
        return np.broadcast_to(np.asarray(y(mesh.nodes), dtype=float), mesh.nodes.shape).copy()
    v = np.asarray(y, dtype=float)
    if v.shape[0] != mesh.n + 1:
        raise ValueError(f"expected {mesh.n + 1} values, got {v.shape[0]}")
    return v


def solve_linear(params: BvpParams, y: GridFunction, *, allow_outside_window: bool = False) -> GridFunction:
    """Solve u'' + y = 0 with the nonlocal conditions, on ``y``'s mesh.

    By default the parameters must lie in the positivity window; pass
    ``allow_outside_window=True`` to only require a nonzero denominator.
    """
    _window_check(params, allow_outside_window)
    _check_mesh(params, y.mesh)
    if not np.all(np.isfinite(y.values)):
        raise ValueError("non-finite right-hand side")
    return GridFunction(y.mesh, green_apply(params, y.mesh, y.values))


def green_matrix(params: BvpParams, mesh: Mesh) -> np.ndarray:
    """Matrix G with solve_linear(params, y).values == G @ y.values."""
    _check_mesh(params, mesh)
    return green_apply(params, mesh, np.eye(mesh.n + 1))


def fd_oracle_solve(params: BvpParams, y: YLike, n: int | None = None, *,
                    allow_outside_window: bool = False) -> GridFunction:
    """Central-difference solution of u'' = -y with both nonlocal conditions as rows.

    Row 0 is u_0 - beta*u_k(eta) = 0, the last row is u_N - alpha * (trapezoid
    of u over [0, eta]) = 0.  The (N+1)x(N+1) system is solved densely.
    """
    _window_check(params, allow_outside_window)
    if n is None:
        n = y.mesh.n if isinstance(y, GridFunction) else default_grid_n()
    mesh = make_mesh(params.eta, params.T, n)
    if isinstance(y, GridFunction) and y.mesh.n != mesh.n:
        y = y.__call__
    yv = _values_on(mesh, y)

    N = mesh.n
    hs = mesh.spacings
    M = np.zeros((N + 1, N + 1))
    rhs = np.zeros(N + 1)
    i = np.arange(1, N)
    hl, hr = hs[:-1], hs[1:]
    M[i, i - 1] = 2.0 / (hl * (hl + hr))
    M[i, i] = -2.0 / (hl * hr)
    M[i, i + 1] = 2.0 / (hr * (hl + hr))
    rhs[1:N] = -yv[1:N]

    k = mesh.k_eta
    M[0, 0] = 1.0
    M[0, k] -= params.beta
    trap = np.zeros(N + 1)
    trap[:k] += hs[:k] / 2
    trap[1 : k + 1] += hs[:k] / 2
    M[N, :] = -params.alpha * trap
    M[N, N] += 1.0

    if np.linalg.cond(M) > 1e14:
        raise SingularSystemError("finite-difference system is (numerically) singular")
    try:
        u = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return GridFunction(mesh, u)


# -- checks -------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeReport:
    min_on_tail: float
    norm: float
    holds: bool
    margin: float  # min_on_tail - gamma * norm


def check_cone_bound(params: BvpParams, u: GridFunction, gamma: float,
                     tol_abs: float | None = None) -> ConeReport:
    """Check min over [eta, T] of u >= gamma * sup|u| on the grid nodes."""
    if not math.isclose(u.mesh.eta, params.eta, rel_tol=1e-14):
        raise InvalidParamsError("eta is not a node of the grid function's mesh")
    norm = u.sup_norm()
    tail = u.tail_min()
    if tol_abs is None:
        tol_abs = NONNEG_TOL * (1.0 + norm)
    margin = tail - gamma * norm
    return ConeReport(tail, norm, margin >= -tol_abs, margin)


ADMISSIBLE = "admissible"
NO_POSITIVE_SOLUTION = "no_positive_solution"
EXCLUDED = "excluded"


def check_nonexistence_region(alpha: float, beta: float, eta: float, T: float) -> str:
    """Classify (alpha, beta) against the positivity window and the alpha > 2T/eta^2 region."""
    if not 0 < eta < T:
        raise InvalidParamsError(f"need 0 < eta < T (eta={eta}, T={T})")
    params = BvpParams(alpha, beta, eta, T)
    if alpha > params.alpha_sup and beta >= 0:
        return NO_POSITIVE_SOLUTION
    if params.is_valid():
        return ADMISSIBLE
    return EXCLUDED
