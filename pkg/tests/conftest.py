import itertools

import pytest

from pcomc.params import ModelParams, refr
from pcomc.population import STAR


def brute_force_failure_vectors(state, params):
    """Failure vectors by filtering every candidate in the full product space.

    Firing is recomputed from pert/refr directly rather than through the
    library's update table or alpha recursion.
    """
    T = params.T
    choices = [[STAR] + list(range(k + 1)) for k in state]
    found = []
    for cand in itertools.product(*choices):
        perceived, all_fire, ok = 0, True, True
        for phase in range(T, 0, -1):
            f = cand[phase - 1]
            if all_fire:
                fires = 1 + refr(phase, params.prf(phase, perceived, params.epsilon), params.R) > T
                all_fire = fires
            if all_fire != (f is not STAR):
                ok = False
                break
            if all_fire:
                perceived += state[phase - 1] - f
        if ok:
            found.append(cand)
    return found


@pytest.fixture
def small_params():
    return ModelParams(N=3, T=6, R=1, epsilon=0.1, mu=0.1)


@pytest.fixture
def example_params():
    return ModelParams(N=8, T=10, R=2, epsilon=0.115, mu=0.1)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the summary hook prints them in order."""
    def record(number: int, ok: bool, detail: str) -> None:
        _CRITERIA[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_CRITERIA[number])
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
