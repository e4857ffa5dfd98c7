"""The four worked examples, embedded so ``reproduce`` needs no files.

``EXPECTED`` holds the exact constants and witnesses each example must
reproduce, plus the certificate the example is meant to exercise.
"""
from __future__ import annotations

from fractions import Fraction as F

from .problem import ProblemSpec, loads

EXAMPLE_TEXT = {
    1: """\
# u'' + 5/32 (2-t)^3 (u^(1/2)/2 + u^2/32) = 0, u(0) = u(1)/30, u(2) = 2 int_0^1 u
[params]
alpha = 2
beta = 1/30
eta = 1
T = 2

[functions]
a = "5/32*(2-t)^3"
f = "u^(1/2)/2 + u^2/32"

[hypotheses]
rho1 = 4
""",
    2: """\
# u'' + 8 e^6 u^2 e^(-u) = 0, u(0) = u(1/4)/10, u(3/4) = 20 int_0^(1/4) u
[params]
alpha = 20
beta = 1/10
eta = 1/4
T = 3/4

[functions]
a = "8"
f = "exp(6)*u^2*exp(-u)"

[hypotheses]
rho2 = 6
""",
    3: """\
# u'' + 183 u e^(2u) / (637 + e^u + e^(2u)) = 0, u(0) = u(1/3)/2, u(1) = 3 int_0^(1/3) u
[params]
alpha = 3
beta = 1/2
eta = 1/3
T = 1

[functions]
a = "1"
f = "183*u*exp(2*u)/(637 + exp(u) + exp(2*u))"
""",
    4: """\
# u'' + 6/25 t u (1 + 799/(1 + u^2)) = 0, u(0) = u(1/2), u(1) = int_0^(1/2) u
[params]
alpha = 1
beta = 1
eta = 1/2
T = 1

[functions]
a = "6/25*t"
f = "u*(1 + 799/(1 + u^2))"
""",
}

# Exact reference values; keys are absent where an example has no value.
EXPECTED = {
    1: {"theorem": "Thm3.1", "rho": 4.0, "lambda1": F(7, 17), "beta_sup": F(1, 2),
        "alpha_sup": 4, "f0": "inf", "finf": "inf", "H2_max": F(3, 2), "H2_M": F(3, 8)},
    2: {"theorem": "Thm3.2", "rho": 6.0, "gamma": F(1, 3), "lambda2": F(3, 20),
        "beta_sup": F(1, 9), "alpha_sup": 24, "gamma_branches": (F(1, 3), F(11, 12), 22),
        "f0": "0", "finf": "0", "H4_min": 36, "H4_M": 6},
    3: {"theorem": "Cor4.2", "gamma": F(1, 4), "lambda1": F(1, 3), "lambda2": F(45, 2),
        "lambda2_over_gamma": 90, "beta_sup": 1, "alpha_sup": 18,
        "gamma_branches": (F(1, 3), F(1, 4), F(2, 3)), "f0": F(61, 213), "finf": 183},
    4: {"theorem": "Cor4.3", "gamma": F(1, 4), "lambda1": 2, "lambda2": 100,
        "lambda2_over_gamma": 400, "beta_sup": F(7, 5), "alpha_sup": 8,
        "gamma_branches": (F(1, 2), F(1, 4), F(1, 3)), "f0": 800, "finf": 1},
}


def example(k: int) -> ProblemSpec:
    if k not in EXAMPLE_TEXT:
        raise KeyError(f"no built-in example {k}; choose from {sorted(EXAMPLE_TEXT)}")
    return loads(EXAMPLE_TEXT[k], name=f"example{k}")
