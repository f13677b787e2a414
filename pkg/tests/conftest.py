import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fsusc import MaterialParams, build_demag_kernel, make_mesh, relax  # noqa: E402
from fsusc.equilibrium import state_from_m  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_field(mesh, rng, complex_=False):
    f = rng.normal(size=mesh.shape + (3,))
    if complex_:
        f = f + 1j * rng.normal(size=mesh.shape + (3,))
    return mesh.restrict(f)


def random_unit_field(mesh, rng):
    f = rng.normal(size=mesh.shape + (3,))
    f /= np.linalg.norm(f, axis=-1, keepdims=True)
    return mesh.restrict(f)


@pytest.fixture(scope="session")
def small_system():
    """2x2x2 box, moderate material, relaxed equilibrium."""
    mesh = make_mesh((2, 2, 2), 1.0)
    params = MaterialParams(0.7, 0.3, 0.4)
    kernel = build_demag_kernel(mesh)
    eq = relax(mesh.uniform([0.0, 0.0, 1.0]), params, kernel, mesh)
    return mesh, params, kernel, eq


@pytest.fixture(scope="session")
def generic_system():
    """2x2x2 cylinder-free box with a tilted equilibrium (non-axis-aligned m)."""
    mesh = make_mesh((2, 2, 2), 0.8)
    u = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
    params = MaterialParams(1.3, 0.5, 0.3, u=u, ell=[0.2, -0.1, 0.4], anisotropy_form="easy_axis")
    kernel = build_demag_kernel(mesh)
    eq = relax(mesh.uniform(u), params, kernel, mesh)
    return mesh, params, kernel, eq


@pytest.fixture(scope="session")
def single_cell():
    mesh = make_mesh((1, 1, 1), 1.0)
    params = MaterialParams(0.0, 0.2, 0.5, ell=[0.0, 0.0, 0.7])
    kernel = build_demag_kernel(mesh)
    eq = state_from_m(mesh.uniform([0.0, 0.0, 1.0]), params, kernel, mesh)
    return mesh, params, kernel, eq


@pytest.fixture(scope="session")
def bench():
    from fsusc.bench import bench_setup

    return bench_setup()
