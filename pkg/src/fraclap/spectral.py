"""First eigenpair of the generalized problem A e = lambda M e.

The smallest eigenvalue realizes the variational characterization
lambda1 = min over nonzero u of (u'Au)/(u'Mu) on the discrete space; its
eigenvector is sign-normalized to be positive, the discrete counterpart
of the positivity of the first eigenfunction.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .assembly import StiffnessSystem
from .errors import SpectralError

MAX_ITERATIONS = 500


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    e1: np.ndarray
    residual_norm: float
    iterations: int


def rayleigh_quotient(system: StiffnessSystem, u: np.ndarray) -> float:
    """Quotient (u'Au)/(u'Mu); always >= lambda1 up to round-off."""
    u = np.asarray(u, dtype=float)
    denom = float(u @ system.M @ u)
    if denom == 0.0:
        raise ValueError("rayleigh quotient is undefined for the zero vector")
    return float(u @ system.A @ u) / denom


def _sign_fix(e: np.ndarray) -> np.ndarray:
    # make the nodal value of largest magnitude positive; ties break toward
    # the lowest index, which np.argmax already does
    k = int(np.argmax(np.abs(e)))
    return -e if e[k] < 0.0 else e


def first_eigenpair(system: StiffnessSystem, tol: float = 1e-10) -> EigenPair:
    """Inverse iteration (shift 0) with dense Cholesky of A.

    Converges to the smallest generalized eigenvalue since A is positive
    definite; the iterate is M-normalized each step and the residual
    ||A e - lambda M e||_2 <= tol * lambda certifies convergence.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    A, M = system.A, system.M
    d = A.shape[0]
    try:
        cho = cho_factor(A)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"stiffness matrix is not positive definite: {exc}")

    e = np.ones(d)
    e /= np.sqrt(e @ M @ e)
    lam = float(e @ A @ e)
    res = np.inf
    for it in range(1, MAX_ITERATIONS + 1):
        w = cho_solve(cho, M @ e)
        nrm = np.sqrt(w @ M @ w)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise SpectralError("inverse iteration produced a degenerate iterate")
        e = w / nrm
        lam = float(e @ A @ e)
        res = float(np.linalg.norm(A @ e - lam * (M @ e)))
        if res <= tol * lam:
            e = _sign_fix(e)
            return EigenPair(lambda1=lam, e1=e, residual_norm=res, iterations=it)
    raise SpectralError(
        f"inverse iteration did not reach tolerance {tol:g} in "
        f"{MAX_ITERATIONS} iterations (last residual {res:.3e})"
    )
