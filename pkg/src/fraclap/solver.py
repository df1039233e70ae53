"""Constrained energy minimization and solution certificates.

Minimizes J(u) = (1/2) u'Au - integral of h F(u_h) over the ball
u'Au <= sigma by projected gradient descent with multiple starts, then
polishes interior minimizers with a damped Newton step so the reported
weak-form residual is at solver tolerance.  The certificates mirror the
existence statement: nonnegativity of the nodal values, the strict
energy-ball bound, a negative-energy witness along the first
eigenfunction, and the residual of the discrete Euler-Lagrange equation.
"""

from dataclasses import dataclass, field

import numpy as np

from .assembly import HField, StiffnessSystem, assemble_load
from .errors import ConfigurationError, NumericError
from .hypotheses import Nonlinearity
from .mesh import Mesh
from .quadrature import gauss01, triangle_rule

MAX_DESCENT_ITERATIONS = 100_000
_GRAD_TOL = 1e-9
_F2_MARGIN = 1e-12


@dataclass(frozen=True)
class BallConstraint:
    """Energy ball u'Au <= sigma with sigma derived from the level r."""

    sigma: float
    r: float

    @classmethod
    def from_level(cls, r: float, q: float, c_q: float, gamma_psi: float,
                   h_esssup: float, h_l1: float) -> "BallConstraint":
        if min(r, c_q, gamma_psi, h_esssup, h_l1) <= 0.0:
            raise ConfigurationError("ball constraint needs positive inputs")
        sigma = (r * h_l1 / (c_q * gamma_psi * h_esssup)) ** (2.0 / q)
        return cls(sigma=float(sigma), r=float(r))

    def invert_to_r(self, q: float, c_q: float, gamma_psi: float,
                    h_esssup: float, h_l1: float) -> float:
        return float(self.sigma ** (q / 2.0) * c_q * gamma_psi * h_esssup / h_l1)


@dataclass
class SolveReport:
    u: np.ndarray
    energy: float
    x0_norm_sq: float
    sigma: float
    nonnegative: bool
    nontrivial: bool
    witness_eta: float | None
    bound_F2: bool
    residual_inf: float
    iterations: int
    interior: bool
    details: dict = field(default_factory=dict)


def _F_integral(mesh: Mesh, h_field: HField, nl: Nonlinearity, u: np.ndarray,
                order: int) -> float:
    """integral of h(x) F(u_h(x)) dx by element Gauss quadrature."""
    full = mesh.full_vector(u)
    if mesh.n == 1:
        tq, wq = gauss01(max(order, 6))
        lam = np.stack([1.0 - tq, tq])
        uh = full[mesh.elements] @ lam
        vals = np.asarray(nl.F(uh))
        per_elem = (vals @ wq) * mesh.measures
    else:
        tu, tv, tw = triangle_rule(max(order, 6))
        lam = np.stack([1.0 - tu - tv, tu, tv])
        uh = full[mesh.elements] @ lam
        vals = np.asarray(nl.F(uh))
        per_elem = (vals @ tw) * 2.0 * mesh.measures
    total = float(np.sum(h_field.values * per_elem))
    if not np.isfinite(total):
        raise NumericError("energy quadrature overflowed")
    return total


def energy(system: StiffnessSystem, mesh: Mesh, h_field: HField,
           nl: Nonlinearity, u: np.ndarray) -> float:
    """J(u) = (1/2) u'Au - integral of h F(u_h)."""
    u = np.asarray(u, dtype=float)
    return 0.5 * float(u @ system.A @ u) - _F_integral(
        mesh, h_field, nl, u, system.quadrature_order
    )


def gradient(system: StiffnessSystem, mesh: Mesh, h_field: HField,
             nl: Nonlinearity, u: np.ndarray) -> np.ndarray:
    """Discrete Euler-Lagrange residual A u - b(u), b_i = integral h f(u_h) phi_i."""
    u = np.asarray(u, dtype=float)
    b = assemble_load(mesh, h_field, nl.f, u, system.quadrature_order)
    return system.A @ u - b


def _project_to_ball(u: np.ndarray, A: np.ndarray, sigma: float) -> np.ndarray:
    nsq = float(u @ A @ u)
    if nsq <= sigma or nsq == 0.0:
        return u
    return u * np.sqrt(sigma / nsq)


def _tangent_hessian(system: StiffnessSystem, mesh: Mesh, h_field: HField,
                     nl: Nonlinearity, u: np.ndarray, fprime_step: float = 1e-6):
    """Hessian A - d b(u)/du, with f' by central differences of f."""
    full = mesh.full_vector(u)
    d = system.A.shape[0]
    dofmap = np.full(mesh.nodes.shape[0], -1, dtype=np.int64)
    dofmap[mesh.interior_dof] = np.arange(d)
    H = system.A.copy()
    if mesh.n == 1:
        tq, wq = gauss01(max(system.quadrature_order, 6))
        lam = np.stack([1.0 - tq, tq])
        scale = mesh.measures
    else:
        tu, tv, tw = triangle_rule(max(system.quadrature_order, 6))
        lam = np.stack([1.0 - tu - tv, tu, tv])
        wq = tw
        scale = 2.0 * mesh.measures
    uh = full[mesh.elements] @ lam  # (E, nq)
    step = fprime_step * np.maximum(1.0, np.abs(uh))
    fp = (np.asarray(nl.f(uh + step)) - np.asarray(nl.f(uh - step))) / (2.0 * step)
    nloc = lam.shape[0]
    for m in range(nloc):
        dm = dofmap[mesh.elements[:, m]]
        for l in range(nloc):
            dl = dofmap[mesh.elements[:, l]]
            contrib = (
                (fp * (lam[m] * lam[l])[None, :]) @ wq
            ) * scale * h_field.values
            ok = (dm >= 0) & (dl >= 0)
            np.subtract.at(H, (dm[ok], dl[ok]), contrib[ok])
    return 0.5 * (H + H.T)


def _descend(system, mesh, h_field, nl, sigma, u0, grad_tol, max_iters):
    """Projected gradient descent with Armijo backtracking from a BB step."""
    A = system.A
    u = _project_to_ball(np.asarray(u0, dtype=float), A, sigma)
    J = energy(system, mesh, h_field, nl, u)
    g = gradient(system, mesh, h_field, nl, u)
    step = 1.0 / max(1.0, float(np.linalg.norm(A, ord=np.inf)))
    prev_u = prev_g = None
    it = 0
    for it in range(1, max_iters + 1):
        if prev_u is not None:
            du, dg = u - prev_u, g - prev_g
            denom = float(du @ dg)
            if denom > 1e-300:
                step = float(du @ du) / denom
        trial_step = step
        accepted = False
        for _ in range(60):
            v = _project_to_ball(u - trial_step * g, A, sigma)
            Jv = energy(system, mesh, h_field, nl, v)
            if Jv <= J - 1e-4 * float(g @ (u - v)):
                accepted = True
                break
            trial_step *= 0.5
        if not accepted:
            break
        prev_u, prev_g = u, g
        u, J = v, Jv
        g = gradient(system, mesh, h_field, nl, u)
        b_inf = float(np.linalg.norm(system.A @ u - g, ord=np.inf))
        proj_g = _projected_gradient(u, g, A, sigma)
        if np.linalg.norm(proj_g, ord=np.inf) <= grad_tol * (1.0 + b_inf):
            break
    return u, J, it


def _projected_gradient(u, g, A, sigma):
    """Gradient with its outward radial component removed on the sphere."""
    nsq = float(u @ A @ u)
    if nsq < sigma * (1.0 - 1e-12):
        return g
    Au = A @ u
    denom = float(u @ Au)
    if denom == 0.0:
        return g
    coef = float(g @ u) / denom
    if coef < 0.0:  # pointing inward: full gradient is admissible
        return g
    return g - coef * Au


def _newton_polish(system, mesh, h_field, nl, u, sigma, grad_tol):
    """Damped Newton on the unconstrained stationarity equation, accepted
    only while the iterate stays strictly inside the ball and descends."""
    J = energy(system, mesh, h_field, nl, u)
    for _ in range(40):
        g = gradient(system, mesh, h_field, nl, u)
        b = system.A @ u - g
        target = grad_tol * (1.0 + float(np.linalg.norm(b, ord=np.inf)))
        if float(np.linalg.norm(g, ord=np.inf)) <= 1e-2 * target:
            break
        H = _tangent_hessian(system, mesh, h_field, nl, u)
        try:
            delta = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        improved = False
        for _ in range(30):
            v = u - t * delta
            if float(v @ system.A @ v) < sigma:
                Jv = energy(system, mesh, h_field, nl, v)
                gv = gradient(system, mesh, h_field, nl, v)
                if Jv <= J + 1e-12 * max(1.0, abs(J)) and (
                    np.linalg.norm(gv, ord=np.inf) < np.linalg.norm(g, ord=np.inf)
                ):
                    u, J = v, Jv
                    improved = True
                    break
            t *= 0.5
        if not improved:
            break
    return u, J


def nontriviality_certificate(
    system: StiffnessSystem,
    mesh: Mesh,
    h_field: HField,
    nl: Nonlinearity,
    e1: np.ndarray,
    eta_grid: int = 200,
    lambda1: float | None = None,
):
    """Search for eta with J(eta * e1) < 0 along the first eigenfunction.

    The grid upper end is delta_hat / max nodal value of e1, where
    delta_hat bounds the region where F(xi) exceeds the quadratic
    threshold [lambda1 / (2 essinf h)] xi^2; when that scan finds nothing
    the whole unit range is searched anyway.
    """
    e1 = np.asarray(e1, dtype=float)
    emax = float(np.max(np.abs(e1)))
    if emax <= 0.0:
        raise ConfigurationError("e1 must be nonzero and positive-normalized")
    eta_max = 1.0
    if lambda1 is not None and h_field.essinf > 0.0:
        thr = lambda1 / (2.0 * h_field.essinf)
        xi = np.logspace(-8, 2, 4000)
        with np.errstate(all="ignore"):
            above = np.asarray(nl.F(xi)) > thr * xi**2
        if np.any(above):
            delta_hat = float(xi[np.flatnonzero(above)[-1]])
            eta_max = max(delta_hat / emax, 1e-8)
    etas = np.logspace(np.log10(eta_max) - 8.0, np.log10(eta_max), eta_grid)
    best_eta, best_J = None, 0.0
    for eta in etas:
        J = energy(system, mesh, h_field, nl, float(eta) * e1)
        if J < best_J:
            best_eta, best_J = float(eta), J
    if best_eta is None:
        return None
    return best_eta, best_J


def verify_weak_solution(system, mesh, h_field, nl, u, tol, sigma=None):
    """Residual report for a candidate weak solution.

    Interior points must satisfy ||Au - b(u)||_inf <= tol; points on the
    sphere are checked through the projected gradient instead.
    """
    u = np.asarray(u, dtype=float)
    g = gradient(system, mesh, h_field, nl, u)
    residual_inf = float(np.linalg.norm(g, ord=np.inf))
    interior = True
    if sigma is not None:
        interior = float(u @ system.A @ u) < sigma * (1.0 - 1e-12)
    if interior:
        passed = residual_inf <= tol
        checked = residual_inf
    else:
        proj = _projected_gradient(u, g, system.A, sigma)
        checked = float(np.linalg.norm(proj, ord=np.inf))
        passed = checked <= tol
    return {
        "residual_inf": residual_inf,
        "checked_norm": checked,
        "interior": interior,
        "passed": bool(passed),
    }


def solve_in_ball(
    system: StiffnessSystem,
    mesh: Mesh,
    h_field: HField,
    nl: Nonlinearity,
    constraint: BallConstraint,
    starts: int = 8,
    seed: int = 0,
    grad_tol: float = _GRAD_TOL,
    max_iters: int = MAX_DESCENT_ITERATIONS,
    e1: np.ndarray | None = None,
    lambda1: float | None = None,
) -> SolveReport:
    """Multi-start projected descent over the sigma-ball, plus certificates.

    The negative-energy witness along e1 (when one exists) is always
    injected as a start, so the search begins below the trivial level
    whenever the theorem's construction applies.
    """
    sigma = constraint.sigma
    d = system.A.shape[0]
    rng = np.random.default_rng(seed)

    witness = None
    if e1 is not None:
        witness = nontriviality_certificate(
            system, mesh, h_field, nl, e1, lambda1=lambda1
        )

    start_list = [np.zeros(d)]
    if witness is not None and e1 is not None:
        start_list.append(witness[0] * np.asarray(e1, dtype=float))
    if e1 is not None:
        scale = np.sqrt(sigma / max(float(np.asarray(e1) @ system.A @ e1), 1e-300))
        for frac in (0.1, 0.5, 0.9):
            start_list.append(frac * scale * np.asarray(e1, dtype=float))
    while len(start_list) < max(starts, len(start_list)):
        v = rng.standard_normal(d)
        start_list.append(v * np.sqrt(sigma) / max(np.sqrt(v @ system.A @ v), 1e-300))

    # coarse multi-start phase; only the winner is polished to full
    # tolerance (Newton when interior, tight descent otherwise)
    coarse_tol = max(grad_tol, 1e-5)
    coarse_iters = min(max_iters, 3000)
    best = None
    total_iters = 0
    for k, u0 in enumerate(start_list):
        u, J, its = _descend(
            system, mesh, h_field, nl, sigma, u0, coarse_tol, coarse_iters
        )
        total_iters += its
        if best is None or J < best[1] - 0.0:
            best = (u, J, k)
    u, J, _ = best

    if float(u @ system.A @ u) < sigma:
        u, J = _newton_polish(system, mesh, h_field, nl, u, sigma, grad_tol)
    g = gradient(system, mesh, h_field, nl, u)
    b_inf = float(np.linalg.norm(system.A @ u - g, ord=np.inf))
    if float(np.linalg.norm(
        _projected_gradient(u, g, system.A, sigma), ord=np.inf
    )) > grad_tol * (1.0 + b_inf):
        u, J, its = _descend(
            system, mesh, h_field, nl, sigma, u,
            grad_tol, max(max_iters - total_iters, 1),
        )
        total_iters += its
        if float(u @ system.A @ u) < sigma:
            u, J = _newton_polish(system, mesh, h_field, nl, u, sigma, grad_tol)

    nsq = float(u @ system.A @ u)
    interior = nsq < sigma * (1.0 - _F2_MARGIN)
    bound_F2 = interior
    umax = float(np.max(np.abs(u))) if u.size else 0.0
    nonneg = bool(np.min(u) >= -max(1e-10, 1e-6 * umax)) if u.size else True
    g = gradient(system, mesh, h_field, nl, u)
    residual_inf = float(np.linalg.norm(g, ord=np.inf))
    nontrivial = bool(J < -1e-14) and umax > 0.0

    return SolveReport(
        u=u,
        energy=J,
        x0_norm_sq=nsq,
        sigma=sigma,
        nonnegative=nonneg,
        nontrivial=nontrivial,
        witness_eta=None if witness is None else witness[0],
        bound_F2=bound_F2,
        residual_inf=residual_inf,
        iterations=total_iters,
        interior=interior,
        details={
            "witness_energy": None if witness is None else witness[1],
            "best_start": best[2],
        },
    )
