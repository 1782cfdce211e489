import time
import warnings

import pytest

from rfic.disorder import SeededStream, parse_law

# Lines recorded by the acceptance suite, printed at the end of the run.
ACCEPTANCE_LINES = []

GAUSS_J = (3.0, 5.0, 6.0, 8.0)


@pytest.fixture(scope="session")
def gaussian():
    return parse_law("gaussian:1")


class Timed(dict):
    """Results keyed by parameter, with the wall time spent on each."""

    def __init__(self):
        super().__init__()
        self.seconds = {}


@pytest.fixture(scope="session")
def gaussian_joint(gaussian):
    """Transfer, DP and ergodic densities for gaussian(1) at N=1e7 with 32
    replicas per J. Shared by the first and second order checks."""
    from rfic.maxenergy import joint_densities
    root = SeededStream(20240611)
    out = Timed()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for i, J in enumerate(GAUSS_J):
            t0 = time.perf_counter()
            out[J] = joint_densities(gaussian, J, 10 ** 7, 32, root.split(i))
            out.seconds[J] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def gaussian_kappa_hat(gaussian):
    from rfic.renewal import kappa_hat
    t0 = time.perf_counter()
    kh = kappa_hat(gaussian, 10 ** 5, SeededStream(77))
    return kh, time.perf_counter() - t0


@pytest.fixture(scope="session")
def gaussian_kappa_tilde(gaussian):
    """Both environment functionals at Gamma = 8, 12, 16 with 4000 environments."""
    from rfic.renewal import kappa_tilde
    root = SeededStream(91)
    out = Timed()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for j, g in enumerate((8.0, 12.0, 16.0)):
            t0 = time.perf_counter()
            out[g] = kappa_tilde(gaussian, [g], 4000, root.split(j))[0]
            out.seconds[g] = time.perf_counter() - t0
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
