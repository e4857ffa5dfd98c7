"""Hypothesis checks on f and assembly of existence certificates.

Every hypothesis on the growth of f reduces to one of two kinds of evidence:
a sampled extremum of f on an interval (the rho/M conditions), or a
classification of the limits f(u)/u at 0+ and at infinity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cone_constants import ConeConstants
from .expr import ExprEvalError, NonFiniteError

log = logging.getLogger(__name__)

REL_MARGIN = 1e-9
MARGINAL = 1e-6
SCAN_NODES = 4096
SCAN_REFINEMENTS = 3
SEARCH_COUNT = 200
DEFAULT_RHO_RANGE = (1e-4, 1e4)

ZERO, FINITE, INFINITE = "zero", "finite", "infinite"


class InconclusiveAsymptoticsError(ValueError):
    """The sampled ratio f(u)/u does not settle; the limit has to be declared."""


# -- limits of f(u)/u -----------------------------------------------------------


@dataclass(frozen=True)
class Limit:
    kind: str
    value: float

    @classmethod
    def zero(cls) -> "Limit":
        return cls(ZERO, 0.0)

    @classmethod
    def infinite(cls) -> "Limit":
        return cls(INFINITE, math.inf)

    @classmethod
    def finite(cls, value: float) -> "Limit":
        if value == 0:
            return cls.zero()
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"finite limit must be a nonnegative real, got {value}")
        return cls(FINITE, float(value))

    @classmethod
    def parse(cls, text: str) -> "Limit":
        s = str(text).strip().lower()
        if s in ("inf", "infinity", "+inf"):
            return cls.infinite()
        if "/" in s:
            p, q = s.split("/", 1)
            return cls.finite(float(p) / float(q))
        return cls.finite(float(s))

    def __str__(self) -> str:
        if self.kind == INFINITE:
            return "inf"
        if self.kind == ZERO:
            return "0"
        return f"{self.value:.12g}"


@dataclass(frozen=True)
class AsymptoticEstimate:
    f0: Limit
    f_inf: Limit
    declared: bool
    sample_window: tuple[float, float] = (1e-8, 1e8)

    @property
    def evidence(self) -> str:
        return "declared" if self.declared else "sampled limit (heuristic)"


SMALL_EXPONENTS = np.linspace(-2.0, -8.0, 25)
LARGE_EXPONENTS = np.linspace(2.0, 8.0, 25)


def _ratio_ladder(f: Callable, u: np.ndarray) -> np.ndarray:
    """f(u)/u along ``u``, stopping at the first overflow."""
    out = []
    for x in u:
        try:
            fx = float(f(float(x)))
        except NonFiniteError:
            break
        out.append(fx / x)
    return np.array(out)


def classify_ratio(r: np.ndarray, step: float) -> Limit:
    """Classify a sequence of f(u)/u samples ordered toward the limit.

    ``step`` is the ratio between consecutive distances to the limit point.
    Finite when the last three samples agree within 1% (refined by one
    Richardson step assuming first-order approach); zero/infinite when the
    sequence is monotone and either crosses 1e-6/1e6 or keeps changing by a
    factor of at least 1.5 per decade.
    """
    if r.size < 3 or np.any(r < 0) or not np.all(np.isfinite(r)):
        raise InconclusiveAsymptoticsError(f"not enough usable samples ({r.size})")
    last3 = r[-3:]
    if np.all(last3 == 0):
        return Limit.zero()
    rm = r[-1]
    if rm > 0 and np.all(np.abs(last3 - rm) <= 0.01 * rm):
        value = rm + (rm - r[-2]) / (step - 1.0)
        return Limit.finite(value if value > 0 else rm)

    per_decade = max(1, int(round(1.0 / math.log10(step))))
    back = r[-1 - min(per_decade, r.size - 1)]
    tol = 1e-12 * np.maximum(np.abs(r[:-1]), np.abs(r[1:]))
    d = np.diff(r)
    if np.all(d <= tol):
        if rm < 1e-6 or (rm > 0 and back / rm >= 1.5):
            return Limit.zero()
    if np.all(d >= -tol):
        if rm > 1e6 or (back > 0 and rm / back >= 1.5):
            return Limit.infinite()
    raise InconclusiveAsymptoticsError("f(u)/u neither settles nor diverges monotonically")


def estimate_asymptotics(f: Callable, declared: Optional[tuple] = None) -> AsymptoticEstimate:
    """Limits of f(u)/u at 0+ and infinity, declared or sampled.

    Sampling uses u = 10^-2 .. 10^-8 and 10^2 .. 10^8 at quarter-decade steps.
    """
    if declared is not None:
        f0, finf = (x if isinstance(x, Limit) else Limit.parse(x) for x in declared)
        return AsymptoticEstimate(f0, finf, True)
    step = 10 ** 0.25
    small = 10.0 ** SMALL_EXPONENTS
    large = 10.0 ** LARGE_EXPONENTS
    try:
        f0 = classify_ratio(_ratio_ladder(f, small), step)
    except InconclusiveAsymptoticsError as exc:
        raise InconclusiveAsymptoticsError(f"f0: {exc}; declare it under [asymptotics]") from exc
    try:
        finf = classify_ratio(_ratio_ladder(f, large), step)
    except InconclusiveAsymptoticsError as exc:
        raise InconclusiveAsymptoticsError(f"f_inf: {exc}; declare it under [asymptotics]") from exc
    return AsymptoticEstimate(f0, finf, False, (float(small[-1]), float(large[-1])))


# -- witnesses ---------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisWitness:
    name: str
    holds: bool
    rho: Optional[float] = None
    M: Optional[float] = None
    theta: Optional[float] = None
    extremum: Optional[float] = None
    evidence: str = ""
    marginal: bool = False


def scan_extremum(f: Callable, lo: float, hi: float, kind: str = "max",
                  nodes: int = SCAN_NODES, refinements: int = SCAN_REFINEMENTS) -> tuple[float, float]:
    """Max or min of f on [lo, hi] by a dense scan refined around the best node."""
    pick = np.argmax if kind == "max" else np.argmin
    u = np.linspace(lo, hi, nodes)
    fv = np.broadcast_to(f(u), u.shape)
    i = int(pick(fv))
    best_u, best_f = float(u[i]), float(fv[i])
    for _ in range(refinements):
        a, b = u[max(i - 1, 0)], u[min(i + 1, u.size - 1)]
        if b <= a:
            break
        u = np.linspace(a, b, nodes)
        fv = np.broadcast_to(f(u), u.shape)
        i = int(pick(fv))
        better = fv[i] > best_f if kind == "max" else fv[i] < best_f
        if better:
            best_u, best_f = float(u[i]), float(fv[i])
    return best_f, best_u


def check_H2(f: Callable, lambda1: float, rho1: float, nodes: int = SCAN_NODES) -> HypothesisWitness:
    """f(u) <= M rho1 on [0, rho1] for some M in (0, lambda1]."""
    if rho1 <= 0:
        raise ValueError("rho1 must be positive")
    try:
        S, _ = scan_extremum(f, 0.0, rho1, "max", nodes)
    except ExprEvalError as exc:
        return HypothesisWitness("H2", False, rho=rho1, evidence=f"f not evaluable on [0, rho]: {exc}")
    bound = lambda1 * rho1
    holds = S <= bound * (1 + REL_MARGIN)
    M = min(max(S / rho1, lambda1 * 1e-12), lambda1)
    return HypothesisWitness(
        "H2", bool(holds), rho=rho1, M=M, extremum=S, evidence="sampled extremum",
        marginal=bool(holds and S > bound * (1 - MARGINAL)))


def check_H4(f: Callable, lambda2: float, gamma: float, rho2: float,
             nodes: int = SCAN_NODES) -> HypothesisWitness:
    """f(u) >= M rho2 on [gamma rho2, rho2] for some M >= lambda2."""
    if rho2 <= 0:
        raise ValueError("rho2 must be positive")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    try:
        m, _ = scan_extremum(f, gamma * rho2, rho2, "min", nodes)
    except ExprEvalError as exc:
        return HypothesisWitness("H4", False, rho=rho2,
                                 evidence=f"f not evaluable on [gamma rho, rho]: {exc}")
    bound = lambda2 * rho2
    holds = m >= bound * (1 - REL_MARGIN)
    return HypothesisWitness(
        "H4", bool(holds), rho=rho2, M=m / rho2, extremum=m, evidence="sampled extremum",
        marginal=bool(holds and m < bound * (1 + MARGINAL)))


def search_rho(f: Callable, which: str, constants: ConeConstants, rho_min: float, rho_max: float,
               exclude: Sequence[float] = (), count: int = SEARCH_COUNT,
               nodes: int = SCAN_NODES) -> Optional[HypothesisWitness]:
    """Smallest of ``count`` log-spaced rho in [rho_min, rho_max] passing H2 or H4."""
    if not 0 < rho_min < rho_max:
        raise ValueError("need 0 < rho_min < rho_max")
    for rho in np.geomspace(rho_min, rho_max, count):
        rho = float(rho)
        if any(math.isclose(rho, x, rel_tol=1e-12) for x in exclude):
            continue
        if which == "H2":
            w = check_H2(f, constants.lambda1, rho, nodes)
        elif which == "H4":
            w = check_H4(f, constants.lambda2, constants.gamma, rho, nodes)
        else:
            raise ValueError(f"unknown hypothesis {which!r}")
        if w.holds:
            return w
        if w.evidence.startswith("f not evaluable"):
            log.debug("rho search for %s stopped at rho=%g: %s", which, rho, w.evidence)
            break
    return None


def _theta1(limit: Limit, lambda1: float) -> float:
    ratio = limit.value / lambda1
    return min(1.0, max(ratio * (1 + MARGINAL), MARGINAL))


def _theta2(limit: Limit, lambda2: float, gamma: float) -> float:
    ratio = gamma * limit.value / lambda2
    if not math.isfinite(ratio):
        return 1e6
    return min(max(1.0, ratio * (1 - MARGINAL)), 1e6)


def asymptotic_hypotheses(asym: AsymptoticEstimate, c: ConeConstants) -> dict[str, HypothesisWitness]:
    """H1, H3, H5-H8 with the theta parameters eliminated analytically.

    H5/H8 hold iff the limit lies in [0, lambda1); H6/H7 iff it exceeds
    lambda2/gamma (an infinite limit counts).
    """
    ev = asym.evidence
    f0, finf = asym.f0, asym.f_inf
    lo, hi = c.lambda1, c.lambda2 / c.gamma

    def below(lim: Limit, name: str) -> HypothesisWitness:
        holds = lim.kind != INFINITE and lim.value < lo * (1 - REL_MARGIN)
        return HypothesisWitness(name, bool(holds), theta=_theta1(lim, lo) if holds else None,
                                 evidence=ev, marginal=bool(holds and lim.value > lo * (1 - MARGINAL)))

    def above(lim: Limit, name: str) -> HypothesisWitness:
        holds = lim.kind == INFINITE or lim.value > hi * (1 + REL_MARGIN)
        return HypothesisWitness(name, bool(holds),
                                 theta=_theta2(lim, c.lambda2, c.gamma) if holds else None,
                                 evidence=ev,
                                 marginal=bool(holds and lim.value < hi * (1 + MARGINAL)))

    return {
        "H1": HypothesisWitness("H1", f0.kind == INFINITE and finf.kind == INFINITE, evidence=ev),
        "H3": HypothesisWitness("H3", f0.kind == ZERO and finf.kind == ZERO, evidence=ev),
        "H5": below(f0, "H5"),
        "H6": above(finf, "H6"),
        "H7": above(f0, "H7"),
        "H8": below(finf, "H8"),
        "D1": HypothesisWitness("D1", f0.kind == ZERO and finf.kind == INFINITE, evidence=ev),
        "D2": HypothesisWitness("D2", f0.kind == INFINITE and finf.kind == ZERO, evidence=ev),
    }


# -- certificates ------------------------------------------------------------------

THEOREM_ORDER = ("Thm3.1", "Thm3.2", "Thm4.1", "Cor4.2", "Cor4.3", "Cor4.4", "Cor4.5",
                 "Thm1.1-D1", "Thm1.1-D2")


@dataclass(frozen=True)
class Certificate:
    theorem: str
    solution_count_guaranteed: int
    norm_localization: tuple[tuple[float, float], ...]
    witnesses: tuple[HypothesisWitness, ...] = field(default=())

    @property
    def marginal(self) -> bool:
        return any(w.marginal for w in self.witnesses)

    def witness(self, name: str) -> Optional[HypothesisWitness]:
        return next((w for w in self.witnesses if w.name == name), None)

    def summary(self) -> str:
        if self.solution_count_guaranteed == 2:
            rho = self.norm_localization[0][1]
            return f"{self.theorem}: two solutions, 0<|u1|<{rho:.12g}<|u2|"
        lo, hi = self.norm_localization[0]
        if lo == 0 and math.isinf(hi):
            return f"{self.theorem}: at least one solution"
        return f"{self.theorem}: at least one solution, {lo:.12g}<|u|<{hi:.12g}"


def _two(theorem: str, rho: float, witnesses) -> Certificate:
    return Certificate(theorem, 2, ((0.0, rho), (rho, math.inf)), tuple(witnesses))


def _one(theorem: str, witnesses, lo: float = 0.0, hi: float = math.inf) -> Certificate:
    return Certificate(theorem, 1, ((lo, hi),), tuple(witnesses))


@dataclass
class HypothesisReport:
    """All hypothesis witnesses computed while certifying, fired or not."""

    asymptotics: AsymptoticEstimate
    witnesses: dict[str, HypothesisWitness]
    certificates: list[Certificate]


def _rho_witness(f, which, c: ConeConstants, rho: Optional[float], rho_range, exclude=()):
    if rho is not None:
        w = (check_H2(f, c.lambda1, rho) if which == "H2"
             else check_H4(f, c.lambda2, c.gamma, rho))
        if w.holds and not any(math.isclose(rho, x, rel_tol=1e-12) for x in exclude):
            return w
    found = search_rho(f, which, c, rho_range[0], rho_range[1], exclude=exclude)
    if found is not None:
        return found
    return w if rho is not None else HypothesisWitness(which, False, evidence="no rho found in scan")


def evaluate(f: Callable, constants: ConeConstants, asym: AsymptoticEstimate,
             rho1: Optional[float] = None, rho2: Optional[float] = None,
             rho_range: tuple[float, float] = DEFAULT_RHO_RANGE) -> HypothesisReport:
    c = constants
    hyp = asymptotic_hypotheses(asym, c)
    h2 = _rho_witness(f, "H2", c, rho1, rho_range)
    h4 = _rho_witness(f, "H4", c, rho2, rho_range)
    if h2.holds and h4.holds and math.isclose(h2.rho, h4.rho, rel_tol=1e-12):
        retry = _rho_witness(f, "H4", c, None, rho_range, exclude=(h2.rho,))
        if retry.holds:
            h4 = retry
    hyp["H2"], hyp["H4"] = h2, h4
    H = hyp

    certs = []
    if H["H1"].holds and h2.holds:
        certs.append(_two("Thm3.1", h2.rho, [H["H1"], h2]))
    if H["H3"].holds and h4.holds:
        certs.append(_two("Thm3.2", h4.rho, [H["H3"], h4]))
    if h2.holds and h4.holds and not math.isclose(h2.rho, h4.rho, rel_tol=1e-12):
        certs.append(_one("Thm4.1", [h2, h4], min(h2.rho, h4.rho), max(h2.rho, h4.rho)))
    if H["H5"].holds and H["H6"].holds:
        certs.append(_one("Cor4.2", [H["H5"], H["H6"]]))
    if H["H7"].holds and H["H8"].holds:
        certs.append(_one("Cor4.3", [H["H7"], H["H8"]]))
    if h2.holds and H["H6"].holds and H["H7"].holds:
        certs.append(_two("Cor4.4", h2.rho, [h2, H["H6"], H["H7"]]))
    if h4.holds and H["H5"].holds and H["H8"].holds:
        certs.append(_two("Cor4.5", h4.rho, [h4, H["H5"], H["H8"]]))
    if H["D1"].holds:
        certs.append(_one("Thm1.1-D1", [H["D1"]]))
    if H["D2"].holds:
        certs.append(_one("Thm1.1-D2", [H["D2"]]))
    return HypothesisReport(asym, hyp, certs)


def certify(problem, constants: ConeConstants, asymptotics: Optional[AsymptoticEstimate] = None,
            rho_range: tuple[float, float] = DEFAULT_RHO_RANGE) -> list[Certificate]:
    """Every certificate whose hypotheses hold for ``problem``, in theorem order.

    Raises InconclusiveAsymptoticsError when the limits of f(u)/u can be
    neither sampled nor read from the problem's declaration.
    """
    return certify_report(problem, constants, asymptotics, rho_range).certificates


def certify_report(problem, constants: ConeConstants, asymptotics: Optional[AsymptoticEstimate] = None,
                   rho_range: tuple[float, float] = DEFAULT_RHO_RANGE) -> HypothesisReport:
    if asymptotics is None:
        asymptotics = estimate_asymptotics(problem.f, problem.asymptotics)
    return evaluate(problem.f, constants, asymptotics, problem.rho1, problem.rho2, rho_range)


def primary_certificate(certs: Sequence[Certificate]) -> Optional[Certificate]:
    """The strongest fired certificate.

    More guaranteed solutions wins; ties go to the certificate resting on fewer
    scanned rho witnesses (limits are cheaper evidence than a sampled
    extremum), then to theorem order.
    """
    if not certs:
        return None

    def key(c: Certificate):
        scanned = sum(w.name in ("H2", "H4") for w in c.witnesses)
        return (-c.solution_count_guaranteed, scanned, THEOREM_ORDER.index(c.theorem))

    return min(certs, key=key)
