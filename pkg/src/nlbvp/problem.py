"""Problem files: a sectioned ``key = value`` format read with configparser.

Example::

    # u'' + a(t) f(u) = 0,  u(0) = beta u(eta),  u(T) = alpha int_0^eta u
    [params]
    alpha = 2
    beta  = 1/30
    eta   = 1
    T     = 2

    [functions]
    a = "5/32*(2-t)^3"
    f = "u^(1/2)/2 + u^2/32"

    [asymptotics]        # optional: 0, inf, or a number
    f0   = inf
    finf = inf

    [hypotheses]         # optional
    rho1 = 4

    [solver]             # optional
    n = 1024
    residual_tol = 1e-8
    max_iterations = 500
    start_scales = 0.01, 0.1, 1, 10
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .criteria import Limit
from .expr import Expr, ExprError, parse
from .linear_kernel import BvpParams

SECTIONS = {
    "params": {"alpha", "beta", "eta", "T"},
    "functions": {"a", "f"},
    "asymptotics": {"f0", "finf"},
    "hypotheses": {"rho1", "rho2"},
    "solver": {"n", "residual_tol", "max_iterations", "start_scales"},
}
REQUIRED = {"params": {"alpha", "beta", "eta", "T"}, "functions": {"a", "f"}}


class SpecError(ValueError):
    """Malformed problem file."""


def parse_real(text: str) -> float:
    """Decimal or ``p/q`` rational."""
    s = text.strip()
    try:
        if "/" in s:
            p, q = s.split("/", 1)
            value = float(Fraction(p.strip()) / Fraction(q.strip()))
        else:
            value = float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise SpecError(f"not a finite number: {text!r}")
    return value


def _unquote(text: str) -> str:
    s = text.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]
    return s


@dataclass(frozen=True)
class ProblemSpec:
    params: BvpParams
    a: Expr
    f: Expr
    asymptotics: Optional[tuple[Limit, Limit]] = None
    rho1: Optional[float] = None
    rho2: Optional[float] = None
    grid_n: Optional[int] = None
    residual_tol: Optional[float] = None
    max_iterations: Optional[int] = None
    start_scales: Optional[tuple[float, ...]] = None
    name: str = field(default="", compare=False)

    @property
    def a_source(self) -> str:
        return str(self.a)

    @property
    def f_source(self) -> str:
        return str(self.f)

    def with_params(self, **changes) -> "ProblemSpec":
        return replace(self, params=replace(self.params, **changes))

    def to_text(self) -> str:
        p = self.params
        lines = ["[params]", f"alpha = {p.alpha!r}", f"beta = {p.beta!r}",
                 f"eta = {p.eta!r}", f"T = {p.T!r}", "", "[functions]",
                 f'a = "{self.a_source}"', f'f = "{self.f_source}"']
        if self.asymptotics:
            lines += ["", "[asymptotics]", f"f0 = {self.asymptotics[0]}",
                      f"finf = {self.asymptotics[1]}"]
        hyp = [f"{k} = {v!r}" for k, v in (("rho1", self.rho1), ("rho2", self.rho2)) if v is not None]
        if hyp:
            lines += ["", "[hypotheses]", *hyp]
        return "\n".join(lines) + "\n"


def loads(text: str, name: str = "<string>", validate: bool = True) -> ProblemSpec:
    """Parse problem-file text; with ``validate`` the parameter window is enforced."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), interpolation=None,
                                   default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise SpecError(f"{name}: {exc}") from exc

    for section in cp.sections():
        if section not in SECTIONS:
            raise SpecError(f"{name}: unknown section [{section}]")
        unknown = set(cp[section]) - SECTIONS[section]
        if unknown:
            raise SpecError(f"{name}: unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    for section, keys in REQUIRED.items():
        if section not in cp:
            raise SpecError(f"{name}: missing section [{section}]")
        missing = keys - set(cp[section])
        if missing:
            raise SpecError(f"{name}: missing key(s) in [{section}]: {', '.join(sorted(missing))}")

    sec = cp["params"]
    params = BvpParams(*(parse_real(sec[k]) for k in ("alpha", "beta", "eta", "T")))
    try:
        a = parse(_unquote(cp["functions"]["a"]), "t")
        f = parse(_unquote(cp["functions"]["f"]), "u")
    except ExprError as exc:
        raise SpecError(f"{name}: {exc}") from exc

    kw = {}
    if "asymptotics" in cp:
        s = cp["asymptotics"]
        if set(s) != {"f0", "finf"}:
            raise SpecError(f"{name}: [asymptotics] needs both f0 and finf")
        try:
            kw["asymptotics"] = (Limit.parse(s["f0"]), Limit.parse(s["finf"]))
        except ValueError as exc:
            raise SpecError(f"{name}: bad asymptotic value: {exc}") from exc
    if "hypotheses" in cp:
        for k, v in cp["hypotheses"].items():
            rho = parse_real(v)
            if rho <= 0:
                raise SpecError(f"{name}: {k} must be positive")
            kw[k] = rho
    if "solver" in cp:
        s = cp["solver"]
        try:
            if "n" in s:
                kw["grid_n"] = int(s["n"])
                if kw["grid_n"] < 4:
                    raise SpecError(f"{name}: n must be >= 4")
            if "residual_tol" in s:
                kw["residual_tol"] = parse_real(s["residual_tol"])
            if "max_iterations" in s:
                kw["max_iterations"] = int(s["max_iterations"])
            if "start_scales" in s:
                kw["start_scales"] = tuple(parse_real(x) for x in s["start_scales"].split(","))
        except ValueError as exc:
            raise SpecError(f"{name}: bad [solver] value: {exc}") from exc

    spec = ProblemSpec(params, a, f, name=name, **kw)
    if validate:
        spec.params.validate()
    return spec


def load(path, validate: bool = True) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    return loads(text, name=str(path), validate=validate)
