"""Numerical fixed points of the Hammerstein operator: the positive solutions themselves.

Each start u = c runs damped Picard iteration; when that stalls or diverges
the best iterate seen is handed to Newton's method on u - A u = 0.  Picard
finds the attracting fixed points, Newton the repelling ones, so the usual
two-solution structure is recovered from a ladder of start scales.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .criteria import Certificate
from .expr import ExprEvalError
from .linear_kernel import NONNEG_TOL, GridFunction, check_cone_bound, default_grid_n
from .operator import OperatorContext, OperatorEvalError, apply_A, eval_f

log = logging.getLogger(__name__)

TRIVIAL_NORM = 1e-10
OMEGA_FLOOR = 1.0 / 64
STAGNATION_RATIO = 0.99
STAGNATION_STEPS = 10
NEWTON_MAX_STEPS = 60
DIVERGENCE_NORM = 1e12
POLISH_TOL = 1e-13


class NoConvergenceError(RuntimeError):
    def __init__(self, best_residual: float):
        self.best_residual = best_residual
        super().__init__(f"no start converged (best fixed-point residual {best_residual:.3e})")


def default_start_scales(rho_ref: float = 1.0, count: int = 24) -> tuple[float, ...]:
    return tuple(float(c) for c in np.geomspace(1e-3 * rho_ref, 1e3 * rho_ref, count))


@dataclass(frozen=True)
class SolveOptions:
    grid_n: Optional[int] = None
    residual_tol: float = 1e-8
    max_iterations: int = 500
    start_scales: Optional[tuple[float, ...]] = None
    dedup_distance: float = 1e-4
    rho_ref: float = 1.0

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ValueError("residual_tol must be positive")
        if self.start_scales is not None and (
                not self.start_scales or any(c <= 0 for c in self.start_scales)):
            raise ValueError("start_scales must be nonempty and positive")

    @property
    def n(self) -> int:
        return self.grid_n if self.grid_n is not None else default_grid_n()

    @property
    def scales(self) -> tuple[float, ...]:
        if self.start_scales is not None:
            return tuple(self.start_scales)
        return default_start_scales(self.rho_ref)


@dataclass
class SolveResult:
    u: GridFunction
    sup_norm: float
    fixed_point_residual: float
    ode_residual: float
    bc_residuals: tuple[float, float]
    in_cone: bool
    certificate_bucket: Optional[str] = None
    converged: bool = False
    start_scale: Optional[float] = None
    method: str = ""
    iterations: int = 0

    @property
    def is_trivial(self) -> bool:
        return self.sup_norm < TRIVIAL_NORM


@dataclass
class SolveReport:
    solutions: list[SolveResult]
    trivial: Optional[SolveResult] = None
    best_residual: float = math.inf
    attempts: list[tuple[float, str, float]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.solutions)

    def __len__(self) -> int:
        return len(self.solutions)

    def __getitem__(self, i):
        return self.solutions[i]


def verify_solution(ctx: OperatorContext, u: GridFunction, gamma: Optional[float] = None) -> SolveResult:
    """Residuals of a candidate solution; failures are reported as values."""
    if gamma is None:
        gamma = ctx.gamma
    p = ctx.params
    mesh = ctx.mesh
    v = u.values
    try:
        Au = apply_A(ctx, u)
        fp = float(np.max(np.abs(Au.values - v)))
        w = ctx.a_values * eval_f(ctx, v)
    except (OperatorEvalError, ExprEvalError):
        fp = math.inf
        w = np.full_like(v, np.nan)
    hs = mesh.spacings
    hl, hr = hs[:-1], hs[1:]
    upp = 2.0 * ((v[2:] - v[1:-1]) / hr - (v[1:-1] - v[:-2]) / hl) / (hl + hr)
    ode = float(np.max(np.abs(upp + w[1:-1]))) if np.all(np.isfinite(w)) else math.inf
    bc0 = abs(v[0] - p.beta * v[mesh.k_eta])
    bc1 = abs(v[-1] - p.alpha * mesh.integral_left(v[: mesh.k_eta + 1]))
    cone = check_cone_bound(p, u, gamma)
    nonneg = bool(np.min(v) >= -NONNEG_TOL * (1 + u.sup_norm()))
    return SolveResult(u, u.sup_norm(), fp, ode, (float(bc0), float(bc1)),
                       bool(cone.holds and nonneg))


# -- iteration --------------------------------------------------------------------


def _residual(ctx, v):
    Av = apply_A(ctx, GridFunction(ctx.mesh, v)).values
    return Av, float(np.max(np.abs(Av - v)))


def _picard(ctx: OperatorContext, v: np.ndarray, opts: SolveOptions):
    """Damped Picard iteration.  Returns (v, residual, converged, best_v, best_res, steps)."""
    omega = 1.0
    Av, res = _residual(ctx, v)
    best_v, best_res = v, res
    prev = res
    slow = 0
    for step in range(1, opts.max_iterations + 1):
        if res <= opts.residual_tol:
            return v, res, True, best_v, best_res, step
        v = (1 - omega) * v + omega * Av
        if np.max(np.abs(v)) > DIVERGENCE_NORM:
            break
        Av, res = _residual(ctx, v)
        if res < best_res:
            best_v, best_res = v, res
        if res > prev:
            omega = max(omega / 2, OMEGA_FLOOR)
        slow = slow + 1 if res > STAGNATION_RATIO * prev else 0
        if slow >= STAGNATION_STEPS:
            break
        prev = res
    return v, res, res <= opts.residual_tol, best_v, best_res, step


def _jacobian(ctx: OperatorContext, v: np.ndarray, fv: np.ndarray) -> np.ndarray:
    """Forward-difference Jacobian of v - A v.

    A v depends on v_j only through w_j = a_j f(v_j), so the difference
    quotient in direction e_j is column j of the Green matrix times
    a_j (f(v_j + d_j) - f(v_j)) / d_j.  All columns come from one batched
    evaluation of f.
    """
    d = np.sqrt(np.finfo(float).eps) * np.maximum(np.abs(v), 1.0)
    fp = (eval_f(ctx, v + d) - fv) / d
    J = -ctx.green * (ctx.a_values * fp)[None, :]
    J[np.diag_indices_from(J)] += 1.0
    return J


def _newton(ctx: OperatorContext, v: np.ndarray, opts: SolveOptions,
            tol: float | None = None, max_steps: int = NEWTON_MAX_STEPS):
    """Newton with backtracking on the sup-norm of the residual."""
    tol = opts.residual_tol if tol is None else tol
    G = ctx.green
    fv = eval_f(ctx, v)
    F = v - G @ (ctx.a_values * fv)
    res = float(np.max(np.abs(F)))
    for step in range(1, max_steps + 1):
        if res <= tol:
            return v, res, True, step
        J = _jacobian(ctx, v, fv)
        try:
            dv = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            log.debug("singular Jacobian; abandoning start")
            return v, res, False, step
        lam = 1.0
        while lam >= 1.0 / 1024:
            trial = v + lam * dv
            try:
                ft = eval_f(ctx, trial)
            except OperatorEvalError:
                lam /= 2
                continue
            Ft = trial - G @ (ctx.a_values * ft)
            rt = float(np.max(np.abs(Ft)))
            if rt < res or not np.isfinite(res):
                break
            lam /= 2
        else:
            return v, res, False, step
        v, fv, F, res = trial, ft, Ft, rt
        if np.max(np.abs(v)) > DIVERGENCE_NORM:
            return v, res, False, step
    return v, res, res <= tol, max_steps


def _attempt(step_fn, *args):
    try:
        return step_fn(*args)
    except (OperatorEvalError, ExprEvalError) as exc:
        log.debug("%s failed: %s", step_fn.__name__, exc)
        return None


def _run_start(ctx: OperatorContext, c: float, opts: SolveOptions) -> list[tuple]:
    """Candidate fixed points from one start scale as (v, residual, ok, method, steps).

    Picard results are polished by Newton; a stalled Picard run hands its best
    iterate to Newton.  Newton is also run from u = c directly, which is what
    reaches fixed points that repel Picard from both sides.
    """
    v0 = np.full(ctx.mesh.n + 1, float(c))
    out = []
    pic = _attempt(_picard, ctx, v0, opts)
    newton_from_start_done = False
    if pic is not None:
        v, res, ok, best_v, best_res, steps = pic
        if ok:
            out.append((v, res, True, "picard", steps))
        else:
            newton_from_start_done = best_v is v0
            nw = _attempt(_newton, ctx, best_v, opts)
            if nw is not None:
                out.append((nw[0], nw[1], nw[2], "picard+newton", steps + nw[3]))
            else:
                out.append((best_v, best_res, False, "picard+newton", steps))
    if not newton_from_start_done:
        nw = _attempt(_newton, ctx, v0, opts)
        if nw is not None:
            out.append((nw[0], nw[1], nw[2], "newton", nw[3]))
    if not out:
        out.append((v0, math.inf, False, "failed", 0))
    return out


def _polish(ctx: OperatorContext, cand: tuple, opts: SolveOptions) -> tuple:
    """A few extra Newton steps toward rounding level; keeps the better iterate."""
    v, res, ok, method, steps = cand
    pol = _attempt(_newton, ctx, v, opts, POLISH_TOL * (1 + np.max(np.abs(v))), 8)
    if pol is not None and pol[1] <= res:
        return pol[0], pol[1], ok, method, steps + pol[3]
    return cand


def _is_duplicate(u: GridFunction, others: Sequence[SolveResult], rel: float) -> bool:
    for r in others:
        scale = max(u.sup_norm(), r.sup_norm, TRIVIAL_NORM)
        if np.max(np.abs(u.values - r.u.values)) <= rel * scale:
            return True
    return False


def solve_fixed_points(ctx: OperatorContext, opts: SolveOptions = SolveOptions()) -> SolveReport:
    """Run every start scale and collect distinct converged fixed points.

    The trivial fixed point (norm below 1e-10) is reported separately from the
    positive solutions.  Raises NoConvergenceError when no start converged.
    """
    if opts.grid_n is not None and ctx.mesh.n != opts.grid_n:
        ctx = ctx.with_mesh(opts.grid_n)
    gamma = ctx.gamma
    report = SolveReport([])
    converged: list[SolveResult] = []
    for c in opts.scales:
        del ctx.clamp_events[:]
        for v, res, ok, method, steps in _run_start(ctx, c, opts):
            report.best_residual = min(report.best_residual, res)
            report.attempts.append((c, method, res))
            if not ok:
                continue
            u = GridFunction(ctx.mesh, v)
            if np.min(v) < -NONNEG_TOL * (1 + u.sup_norm()):
                log.debug("start %g converged to a sign-changing fixed point; dropped", c)
                continue
            if _is_duplicate(u, converged, opts.dedup_distance):
                continue
            v, res, ok, method, steps = _polish(ctx, (v, res, ok, method, steps), opts)
            u = GridFunction(ctx.mesh, v)
            if _is_duplicate(u, converged, opts.dedup_distance):
                continue
            result = verify_solution(ctx, u, gamma)
            result.converged = True
            result.start_scale = c
            result.method = method
            result.iterations = steps
            converged.append(result)
    if not converged:
        raise NoConvergenceError(report.best_residual)
    for r in converged:
        if r.is_trivial:
            report.trivial = r
        else:
            report.solutions.append(r)
    report.solutions.sort(key=lambda r: r.sup_norm)
    return report


# -- certificates ----------------------------------------------------------------


@dataclass
class BucketReport:
    occupancy: list[tuple[str, tuple[float, float], list[int]]]
    empty: list[str]
    unpredicted: list[int]

    @property
    def all_occupied(self) -> bool:
        return not self.empty


def _label(cert: Certificate, k: int, interval) -> str:
    lo, hi = interval
    return f"{cert.theorem}[{k}]({lo:.6g},{'inf' if math.isinf(hi) else f'{hi:.6g}'})"


def classify_against_certificates(results: Sequence[SolveResult], certs: Sequence[Certificate]) -> BucketReport:
    """Match solution norms to the localization intervals of each certificate.

    A solution is in a bucket when lo < |u| < hi strictly.  Each solution's
    ``certificate_bucket`` is set to the first bucket it occupies.
    """
    occupancy = []
    empty = []
    hit = set()
    for cert in certs:
        for k, interval in enumerate(cert.norm_localization):
            lo, hi = interval
            label = _label(cert, k, interval)
            inside = [i for i, r in enumerate(results) if lo < r.sup_norm < hi]
            occupancy.append((label, interval, inside))
            if not inside:
                empty.append(label)
            for i in inside:
                hit.add(i)
                if results[i].certificate_bucket is None:
                    results[i].certificate_bucket = label
    unpredicted = [i for i in range(len(results)) if i not in hit]
    return BucketReport(occupancy, empty, unpredicted)
