import functools
import time

import numpy as np

from nlbvp.builtin import example
from nlbvp.cli import run_solve
from nlbvp.cone_constants import compute_constants
from nlbvp.criteria import certify_report
from nlbvp.linear_kernel import BvpParams

SOLVE_N = 1024
ETA_RATIOS = [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (2, 5), (3, 5), (1, 6)]


def random_params(rng: np.random.Generator) -> BvpParams:
    """Valid parameters with eta/T a small rational, so meshes align exactly."""
    T = float(rng.uniform(0.5, 3.0))
    p, q = ETA_RATIOS[rng.integers(len(ETA_RATIOS))]
    eta = T * p / q
    alpha = float(rng.uniform(0.05, 0.95)) * 2 * T / eta**2
    base = BvpParams(alpha, 0.0, eta, T)
    beta = float(rng.uniform(0.0, 0.95)) * base.beta_sup
    return BvpParams(alpha, beta, eta, T).validate()


def random_smooth_y(rng: np.random.Generator, T: float):
    """Nonnegative trig polynomial on [0, T]."""
    k = np.arange(1, 5)
    c = rng.uniform(0, 1, size=k.size) / k
    phase = rng.uniform(0, 2 * np.pi, size=k.size)
    c0 = float(rng.uniform(0, 1))

    def y(t):
        t = np.asarray(t, dtype=float)
        return c0 + (1 + np.sin(np.pi * np.multiply.outer(t / T, k) + phase)) @ c

    return y


@functools.lru_cache(maxsize=None)
def solved_example(k: int):
    """(report, certificates, buckets, seconds) for a built-in example at n=1024."""
    spec = example(k)
    rep = certify_report(spec, compute_constants(spec.params, spec.a))
    t0 = time.perf_counter()
    out = run_solve(spec, SOLVE_N, rep.certificates)
    return (*out, time.perf_counter() - t0)


ACCEPTANCE_LINES: list[str] = []


def report_criterion(number: int, passed: bool, detail: str):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
