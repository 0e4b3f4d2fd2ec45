import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dmlab.grid import Field, Grid

settings.register_profile(
    "dmlab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dmlab")


def random_field(grid: Grid, rng: np.random.Generator, width: float = 2.0) -> Field:
    """Smooth random field: complex Gaussian noise under a Gaussian window, band limited."""
    x = grid.x
    env = np.exp(-(x**2) / (2 * width**2))
    vals = (rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n)) * env
    # smooth by cutting the spectrum to the inner quarter
    fh = np.fft.fft(vals)
    fh[grid.n // 8 : -grid.n // 8] = 0
    return Field(grid, np.fft.ifft(fh)).normalized()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid():
    return Grid(512, 40.0)


@pytest.fixture(scope="session")
def soliton():
    """The lambda = 1 ground state on the default grid with 128 averaging nodes."""
    from dmlab.quadrature import gauss_legendre
    from dmlab.solver import SolverConfig, solve_ground_state

    return solve_ground_state(SolverConfig(lam=1.0), gauss_legendre(128), Grid(1024, 80.0))


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the verdict line of one acceptance criterion (printed in the terminal summary)."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
