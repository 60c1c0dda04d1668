import numpy as np
import pytest

from glassydecay.config import load_scenario, preset_path
from glassydecay.energy import energy_series
from glassydecay.kernels import PronyKernel
from glassydecay.operator import InitialData, diagonal_operator
from glassydecay.simulator import simulate, simulate_direct


def exact_reference(t):
    """u = (1 + t) e^{-t} for lambda = 1, k = 2 e^{-2t}, u0 = 1, v0 = 0."""
    t = np.asarray(t, dtype=float)
    return (1 + t) * np.exp(-t)


@pytest.fixture(scope="session")
def maxwell():
    return PronyKernel.maxwell(2.0)


@pytest.fixture(scope="session")
def burger_kernel():
    return PronyKernel([0.5, 1.5], [1.0, 3.0])


@pytest.fixture(scope="session")
def single_mode():
    return diagonal_operator([1.0])


@pytest.fixture(scope="session")
def unit_data():
    return InitialData([1.0], [0.0])


@pytest.fixture(scope="session")
def reference_fast(maxwell, single_mode, unit_data):
    return simulate(single_mode, maxwell, unit_data, 10.0, 1e-3)


@pytest.fixture(scope="session")
def reference_direct(maxwell, single_mode, unit_data):
    return simulate_direct(single_mode, maxwell, unit_data, 10.0, 1e-3)


@pytest.fixture(scope="session")
def reference_energy(reference_fast):
    return energy_series(reference_fast)


@pytest.fixture(scope="session")
def multimode():
    return load_scenario(preset_path("wave_1d_multimode"))


@pytest.fixture(scope="session")
def multimode_fast(multimode):
    sc = multimode
    return simulate(sc.operator, sc.kernel, sc.initial, sc.T, sc.dt)


@pytest.fixture(scope="session")
def burger2():
    return load_scenario(preset_path("burger2"))


@pytest.fixture(scope="session")
def burger2_fast(burger2):
    sc = burger2
    return simulate(sc.operator, sc.kernel, sc.initial, sc.T, sc.dt)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one ``criterion N ... PASS/FAIL`` line, print it, and assert it."""

    def record(number, title, passed, detail):
        line = f"criterion {number:>2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
