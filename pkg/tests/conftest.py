import numpy as np
import pytest

from rotflow.spectral import Grid, SpectralField, VectorField, leray_project

ACCEPTANCE_RESULTS = []


def record_acceptance(name, ok, detail=""):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid8():
    return Grid(8, 1.0)


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, 1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_scalar(grid, rng, axis_free=False, band=None):
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if band is not None:
        m = grid.modes
        keep = np.abs(m) <= band
        mask = keep.reshape(-1, 1, 1) & keep.reshape(1, -1, 1) & keep.reshape(1, 1, -1)
        c = np.where(mask, c, 0.0)
    if axis_free:
        c = np.where(np.broadcast_to(grid.axis_mask, grid.shape), 0.0, c)
    c[0, 0, 0] = 0.0
    return SpectralField(grid, c)


def random_divfree(grid, rng, band=None):
    comps = [random_scalar(grid, rng, band=band).coeffs for _ in range(3)]
    v = VectorField.from_coeffs(grid, *comps)
    return leray_project(v)


@pytest.fixture()
def divfree16(grid16, rng):
    return random_divfree(grid16, rng)
