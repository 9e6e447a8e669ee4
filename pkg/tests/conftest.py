import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from odebound import TimeGrid, linear_model, oracle
from odebound.models import RiccatiModel

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def unit_grid():
    return TimeGrid(0.0, 1.0)


@pytest.fixture
def small_grid():
    return TimeGrid(0.0, 1.0, 1001)


def inverse_model(t_end=1.0):
    """``u' + u^2 = 0``, ``u(0) = 1``: solution ``1 / (1 + t)``."""
    return RiccatiModel(0.0, 0.0, 1.0, 0.0, 1.0, t_end, name="inverse")


@pytest.fixture
def riccati_inverse():
    return inverse_model()


@pytest.fixture(scope="session")
def cosmology_reference():
    from odebound import preset_cosmology

    model = preset_cosmology()
    return model, oracle.solve(model, model.grid())


@pytest.fixture(scope="session")
def population_reference():
    from odebound import preset_population

    model = preset_population()
    return model, oracle.solve(model, model.grid())


def linear(lam, **kw):
    return linear_model(lam, **kw)


def sup(x):
    return float(np.max(np.abs(np.asarray(x))))


# -- acceptance reporting --------------------------------------------------------

CRITERIA: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
