import numpy as np
import pytest
from hypothesis import settings

from blgl.fields import make_grid

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def grid():
    return make_grid(8, 128, 4.0, 3.0, 1e-2)


@pytest.fixture(scope="session")
def fine_grid():
    return make_grid(8, 512, 4.0, 3.0, 1e-2)


def random_field(grid, rng, hermitian=True, scale=1.0):
    y = grid.nodes
    c = np.zeros((grid.n_modes, grid.J), dtype=complex)
    for xi in range(0, grid.K + 1):
        y0 = rng.uniform(0.4, 2.0)
        sg = rng.uniform(0.15, 0.4)
        a = rng.normal() + (1j * rng.normal() if xi else 0.0)
        prof = scale * a * np.exp(-0.5 * ((y - y0) / sg) ** 2) / (1 + xi)
        c[xi + grid.K] = prof
        if xi:
            c[-xi + grid.K] = np.conj(prof) if hermitian else rng.normal() * prof
    return c


# one line per acceptance criterion, printed after the run whatever the capture mode
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
