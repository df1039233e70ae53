import json
from pathlib import Path

import numpy as np
import pytest

from fraclap import (
    Kernel,
    assemble_mass,
    assemble_stiffness,
    build_interval_mesh,
    build_rectangle_mesh,
    first_eigenpair,
)

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def stiffness_reference():
    """Frozen brute-force quadrature values (see tools/make_stiffness_reference.py)."""
    with open(DATA_DIR / "stiffness_1d_reference.json") as fh:
        raw = json.load(fh)
    return {key: np.array(val) for key, val in raw.items()}


@pytest.fixture(scope="session")
def mesh16():
    return build_interval_mesh(0.0, 1.0, 16)


@pytest.fixture(scope="session")
def system16(mesh16):
    """Unit-interval system at s = 1/2, shared by the spectral/solver tests."""
    return assemble_stiffness(mesh16, Kernel(n=1, s=0.5), quadrature_order=6)


@pytest.fixture(scope="session")
def eig16(system16):
    return first_eigenpair(system16, tol=1e-10)


@pytest.fixture(scope="session")
def mass16(mesh16):
    return assemble_mass(mesh16)


@pytest.fixture(scope="session")
def rect_mesh():
    return build_rectangle_mesh((0.0, 1.0), (0.0, 1.0), 3, 3)


@pytest.fixture(scope="session")
def rect_system(rect_mesh):
    return assemble_stiffness(rect_mesh, Kernel(n=2, s=0.4), quadrature_order=4)
