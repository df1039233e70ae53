import numpy as np
import pytest
from scipy.linalg import eigh

from fraclap import (
    Kernel,
    assemble_mass,
    assemble_stiffness,
    build_interval_mesh,
    first_eigenpair,
    rayleigh_quotient,
)
from fraclap.errors import SpectralError
from fraclap.spectral import EigenPair


def test_first_eigenpair_matches_dense_solver(system16):
    pair = first_eigenpair(system16, tol=1e-12)
    ref = eigh(system16.A, system16.M, eigvals_only=True)[0]
    assert pair.lambda1 == pytest.approx(ref, rel=1e-12)
    assert pair.residual_norm <= 1e-12 * pair.lambda1
    assert isinstance(pair, EigenPair)


def test_first_eigenfunction_single_signed(eig16):
    e1 = eig16.e1
    assert np.all(e1 > 0.0) or np.all(e1 < 0.0)
    # sign convention: the largest-magnitude nodal value is positive
    assert e1[np.argmax(np.abs(e1))] > 0.0


def test_eigenvalue_residual_identity(system16, eig16):
    r = system16.A @ eig16.e1 - eig16.lambda1 * (system16.M @ eig16.e1)
    assert np.linalg.norm(r) <= 1e-10 * eig16.lambda1


def test_eigenvector_mass_normalized(system16, eig16):
    assert eig16.e1 @ system16.M @ eig16.e1 == pytest.approx(1.0, rel=1e-12)


def test_lambda1_nonincreasing_under_refinement():
    """Richer conforming spaces can only lower the discrete minimum of the
    Rayleigh quotient."""
    values = []
    for cells in (8, 16, 32, 64):
        mesh = build_interval_mesh(0.0, 1.0, cells)
        system = assemble_stiffness(mesh, Kernel(n=1, s=0.5), quadrature_order=6)
        values.append(first_eigenpair(system).lambda1)
    diffs = np.diff(values)
    assert np.all(diffs <= 1e-10 * values[0])


def test_lambda1_scale_invariance(system16):
    """lambda1 is a generalized eigenvalue: scaling A and M together by the
    same factor leaves it unchanged."""
    import dataclasses

    scaled = dataclasses.replace(
        system16, A=3.0 * system16.A, M=3.0 * system16.M
    )
    lam = first_eigenpair(scaled).lambda1
    assert lam == pytest.approx(first_eigenpair(system16).lambda1, rel=1e-11)


def test_rayleigh_quotient_at_eigenvector(system16, eig16):
    assert rayleigh_quotient(system16, eig16.e1) == pytest.approx(
        eig16.lambda1, rel=1e-12
    )
    with pytest.raises(ValueError):
        rayleigh_quotient(system16, np.zeros(system16.A.shape[0]))


def test_rayleigh_quotient_is_lower_bounded_by_lambda1(system16, eig16):
    rng = np.random.default_rng(5)
    for _ in range(10):
        u = rng.standard_normal(system16.A.shape[0])
        assert rayleigh_quotient(system16, u) >= eig16.lambda1 * (1.0 - 1e-12)


def test_indefinite_matrix_rejected(system16):
    import dataclasses

    broken = dataclasses.replace(system16, A=-system16.A)
    with pytest.raises(SpectralError):
        first_eigenpair(broken)
