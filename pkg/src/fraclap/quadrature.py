"""Quadrature rules used by the assembly and load routines."""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def gauss01(n: int):
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def gauss_jacobi01(n: int, beta: float):
    """n-point rule for ∫_0^1 x^beta g(x) dx, beta > -1.

    Returns nodes and weights such that sum(w * g(x)) equals the weighted
    integral; the weight x^beta is absorbed into w.
    """
    x, w = roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 2.0 ** (-beta - 1.0)


@lru_cache(maxsize=32)
def triangle_rule(n: int):
    """Tensor Gauss rule on the unit simplex {u,v >= 0, u+v <= 1}.

    Built by collapsing the n x n Gauss rule on the unit square
    (u = a(1-b), v = a b, Jacobian a).  Weights sum to 1/2.
    """
    a, wa = gauss01(n)
    b, wb = gauss01(n)
    A, B = np.meshgrid(a, b, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    u = (A * (1.0 - B)).ravel()
    v = (A * B).ravel()
    w = (WA * WB * A).ravel()
    return u, v, w


@lru_cache(maxsize=64)
def graded01(panels: int, n: int, ratio: float = 0.5):
    """Composite Gauss rule on [0, 1] with geometric grading toward 0.

    Panels are [r^{k+1}, r^k] for k = 0..panels-1 plus [0, r^panels]
    handled by a plain Gauss panel.  Suitable for integrands with an
    integrable algebraic singularity at 0.
    """
    xs, ws = [], []
    x0, w0 = gauss01(n)
    hi = 1.0
    for _ in range(panels):
        lo = hi * ratio
        xs.append(lo + (hi - lo) * x0)
        ws.append((hi - lo) * w0)
        hi = lo
    xs.append(hi * x0)
    ws.append(hi * w0)
    return np.concatenate(xs), np.concatenate(ws)
