"""Discrete estimate of the embedding constant c_q.

c_q = sup over nonzero u of ||u||_Lq^q / ||u||^q (energy norm); on the
discrete space the supremum over the ellipsoid u'Au = 1 is found by
projected gradient ascent with multiple starts.  The result is a lower
bound for the continuum constant (conforming subspace), which is why
hypothesis checks consume an inflated copy.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import StiffnessSystem
from .errors import ConfigurationError, NumericError
from .mesh import Mesh
from .quadrature import gauss01, triangle_rule

MAX_ASCENT_ITERATIONS = 10_000
_LQ_ORDER = 10


@dataclass(frozen=True)
class EmbeddingEstimate:
    q: float
    c_q_lower: float
    maximizer: np.ndarray
    restarts: int
    two_star: float


def critical_exponent(n: int, s: float) -> float:
    """Fractional critical exponent 2n/(n-2s), +inf when n <= 2s."""
    if n <= 2.0 * s:
        return np.inf
    return 2.0 * n / (n - 2.0 * s)


class _LqForm:
    """Element-wise Gauss data for ||u_h||_Lq^q and its gradient."""

    def __init__(self, mesh: Mesh):
        dofmap = np.full(mesh.nodes.shape[0], -1, dtype=np.int64)
        dofmap[mesh.interior_dof] = np.arange(mesh.num_dof)
        if mesh.n == 1:
            tq, wq = gauss01(_LQ_ORDER)
            lam = np.stack([1.0 - tq, tq])  # (2, nq)
            scale = mesh.measures
        else:
            tu, tv, tw = triangle_rule(_LQ_ORDER)
            lam = np.stack([1.0 - tu - tv, tu, tv])
            wq = tw
            scale = 2.0 * mesh.measures
        self.lam = lam
        self.w = wq * 1.0
        self.scale = scale
        self.elem_dof = dofmap[mesh.elements]  # (E, nloc), -1 on boundary
        self.num_dof = mesh.num_dof

    def _u_at_nodes(self, u):
        vals = np.where(self.elem_dof >= 0, u[np.clip(self.elem_dof, 0, None)], 0.0)
        return vals @ self.lam  # (E, nq)

    def value(self, u, q):
        uq = self._u_at_nodes(u)
        return float(np.sum(self.scale * ((np.abs(uq) ** q) @ self.w)))

    def gradient(self, u, q):
        uq = self._u_at_nodes(u)
        # d/du_i of sum w |u|^q = q |u|^{q-1} sign(u) phi_i
        core = q * np.abs(uq) ** (q - 1.0) * np.sign(uq)  # (E, nq)
        contrib = (core * self.w[None, :]) @ self.lam.T * self.scale[:, None]
        g = np.zeros(self.num_dof)
        mask = self.elem_dof >= 0
        np.add.at(g, self.elem_dof[mask], contrib[mask])
        return g


def _project(u, A):
    nrm = np.sqrt(u @ A @ u)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise NumericError("ascent iterate left the feasible cone")
    return u / nrm


def _ascend(u0, A, form, q, tol):
    u = _project(u0, A)
    val = form.value(u, q)
    best_u, best_val = u, val
    step = 1.0 / max(1.0, float(np.linalg.norm(A)))
    prev_u = None
    prev_g = None
    for _ in range(MAX_ASCENT_ITERATIONS):
        g = form.gradient(u, q)
        if prev_u is not None:
            du = u - prev_u
            dg = g - prev_g
            denom = float(du @ dg)
            if abs(denom) > 1e-300:
                step = abs(float(du @ du) / denom)
        prev_u, prev_g = u, g
        # backtrack until the step actually ascends (BB steps overshoot)
        trial = step
        for _ in range(40):
            v = _project(u + trial * g, A)
            new = form.value(v, q)
            if new >= val:
                break
            trial *= 0.5
        u = v
        if not np.isfinite(new):
            raise NumericError("projected ascent diverged")
        if new > best_val:
            best_u, best_val = u, new
        if abs(new - val) <= tol * max(1.0, abs(new)):
            return best_u, best_val
        val = new
    return best_u, best_val


def estimate_c_q(
    system: StiffnessSystem,
    mesh: Mesh,
    q: float,
    restarts: int = 32,
    tol: float = 1e-10,
    seed: int = 0,
    e1: np.ndarray | None = None,
) -> EmbeddingEstimate:
    """Multi-start projected gradient ascent for the discrete c_q.

    Starts: the first eigenvector (when supplied), the uniform vector, and
    seeded random vectors.  For q = 2 the supremum equals 1/lambda1 and is
    attained along e1.
    """
    two_star = critical_exponent(mesh.n, system.s)
    if not 1.0 <= q < two_star:
        raise ConfigurationError(
            f"exponent q={q} outside the subcritical range [1, {two_star:g})"
        )
    if restarts < 1:
        raise ConfigurationError("restarts must be at least 1")
    d = system.A.shape[0]
    form = _LqForm(mesh)
    rng = np.random.default_rng(seed)
    starts = []
    if e1 is not None:
        starts.append(np.asarray(e1, dtype=float))
    starts.append(np.ones(d))
    while len(starts) < restarts:
        starts.append(rng.standard_normal(d))

    best_val = -np.inf
    best_u = None
    for u0 in starts[:restarts]:
        u, val = _ascend(u0, system.A, form, q, tol)
        if val > best_val:
            best_val = val
            best_u = u
    if best_u is None or best_val <= 0.0:
        raise NumericError("embedding ascent found no positive objective value")
    return EmbeddingEstimate(
        q=q,
        c_q_lower=best_val,
        maximizer=best_u,
        restarts=restarts,
        two_star=two_star,
    )
