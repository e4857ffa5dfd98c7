"""Certify and numerically solve u'' + a(t) f(u) = 0 on [0, T] with
u(0) = beta u(eta) and u(T) = alpha int_0^eta u(s) ds."""

__version__ = "0.1.0"

from .cone_constants import ConeConstants, compute_constants
from .criteria import Certificate, certify, estimate_asymptotics, primary_certificate
from .expr import parse
from .linear_kernel import BvpParams, GridFunction, make_mesh, solve_linear
from .operator import OperatorContext, apply_A
from .problem import ProblemSpec, load, loads
from .solver import SolveOptions, solve_fixed_points

__all__ = [
    "BvpParams", "Certificate", "ConeConstants", "GridFunction", "OperatorContext",
    "ProblemSpec", "SolveOptions", "apply_A", "certify", "compute_constants",
    "estimate_asymptotics", "load", "loads", "make_mesh", "parse", "primary_certificate",
    "solve_fixed_points", "solve_linear",
]
