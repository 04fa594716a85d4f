import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ci", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(scope="session")
def flagship():
    from hypsolve.problem import Problem, example5_declaration

    return Problem.from_declaration(example5_declaration())


@pytest.fixture(scope="session")
def flagship_threshold(flagship):
    from hypsolve.threshold import compute_threshold

    return compute_threshold(flagship, seed=0)


@pytest.fixture(scope="session")
def flagship_solution(flagship, flagship_threshold):
    from hypsolve.solver import SolveConfig, minimize_sublevel

    lam = flagship_threshold.lambda_star / 2
    return minimize_sublevel(SolveConfig(lam=lam), flagship, flagship_threshold)


def pytest_terminal_summary(terminalreporter):
    try:
        from acceptance import RESULTS, TITLES
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n} [{TITLES[n]}]: {'PASS' if ok else 'FAIL'} - {detail}")
