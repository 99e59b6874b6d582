import functools

import numpy as np
import pytest

from secure_isac.experiments import desk_config, run_design
from secure_isac.scenario import build_scenario

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, title: str, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@functools.lru_cache(maxsize=None)
def cached_design(gamma: float = 1.0, N: int = 8, psi: float = 1.0, seed: int = 0):
    return run_design(desk_config(gamma=gamma, N=N, psi=psi, rng_seed=seed))


@pytest.fixture(scope="session")
def desk_run():
    run = cached_design()
    assert run.status == "optimal"
    return run


@pytest.fixture
def desk_scenario():
    return build_scenario(desk_config())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    X = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return X @ X.conj().T
