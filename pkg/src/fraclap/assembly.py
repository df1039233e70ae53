"""Assembly of the kernel-weighted bilinear form, mass matrix and loads.

The double form over Q reduces, for functions vanishing outside Omega, to
the Omega x Omega part plus the exterior-weight term
2 * integral of phi_i phi_j k(x) dx with k = exterior_weight.  The matrix
A is genuinely dense (nonlocal coupling) and is stored dense; mesh sizes
are capped at 5000 interior dofs.

Parallelism: element pairs are split into a fixed number of chunks whose
partial results are merged in chunk order, so the assembled matrices are
bit-identical for any FRACLAP_THREADS value.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _pairs
from ._backend import thread_count
from .errors import AssemblyError, ConfigurationError
from .kernel import FRACTIONAL, Kernel, exterior_weight
from .mesh import Mesh
from .quadrature import gauss01, gauss_jacobi01, graded01, triangle_rule

N_CHUNKS = 64
MAX_DOF = 5000
_ADMISSIBILITY = 0.7
_MAX_SPLIT_DEPTH = 5


@dataclass(frozen=True)
class HField:
    """Nonnegative coefficient field h, piecewise constant per element."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0.0):
            raise ConfigurationError("h field must be nonnegative")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, mesh: Mesh, c: float) -> "HField":
        return cls(np.full(mesh.elements.shape[0], float(c)))

    @classmethod
    def piecewise(cls, mesh: Mesh, pairs) -> "HField":
        """Build from (element_id, value) pairs; every element must be covered."""
        v = np.full(mesh.elements.shape[0], np.nan)
        for eid, val in pairs:
            eid = int(eid)
            if not 0 <= eid < v.size:
                raise ConfigurationError(f"element id {eid} out of range")
            v[eid] = float(val)
        if np.any(np.isnan(v)):
            missing = int(np.flatnonzero(np.isnan(v))[0])
            raise ConfigurationError(f"h field missing a value for element {missing}")
        return cls(v)

    @property
    def esssup(self) -> float:
        return float(np.max(self.values))

    @property
    def essinf(self) -> float:
        return float(np.min(self.values))

    def l1(self, mesh: Mesh) -> float:
        """Integral of h over Omega."""
        return float(np.sum(self.values * mesh.measures))


@dataclass
class StiffnessSystem:
    """Discrete operator data: A (double form over Q, exterior term folded
    in), mass matrix M, and the exterior-weight diagonal bookkeeping."""

    A: np.ndarray
    M: np.ndarray
    exterior_diag: np.ndarray
    quadrature_order: int
    s: float = 0.5  # kernel order, carried along for subcriticality guards


def _pack_kernel(kernel: Kernel):
    if kernel.variant == FRACTIONAL:
        return _pairs.VARIANT_FRACTIONAL, np.array([0.0, 1.0]), np.array([0.0, 0.0])
    return (
        _pairs.VARIANT_TABULATED,
        np.log(kernel.table_r),
        np.log(kernel.table_v),
    )


def _merge_chunks(fn, tasks, d):
    """Run chunk tasks (possibly threaded) and merge COO results in order."""
    nw = min(thread_count(), len(tasks)) if tasks else 1
    if nw <= 1:
        results = (fn(*t) for t in tasks)
    else:
        ex = ThreadPoolExecutor(max_workers=nw)
        results = ex.map(lambda t: fn(*t), tasks)
    A = np.zeros((d, d))
    for rows, cols, vals in results:
        np.add.at(A, (rows, cols), vals)
    if nw > 1:
        ex.shutdown()
    return A


def _dofmap(mesh: Mesh) -> np.ndarray:
    nn = mesh.nodes.shape[0]
    dofmap = np.full(nn, -1, dtype=np.int64)
    dofmap[mesh.interior_dof] = np.arange(mesh.num_dof, dtype=np.int64)
    return dofmap


def _chunk_bounds(n_items: int):
    bounds = np.linspace(0, n_items, N_CHUNKS + 1).astype(np.int64)
    return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


# ---------------------------------------------------------------------------
# interior double integral, 1d


def _assemble_interval_A(mesh: Mesh, kernel: Kernel, order: int) -> np.ndarray:
    variant, tlr, tlv = _pack_kernel(kernel)
    E = mesh.elements.shape[0]
    dofmap = _dofmap(mesh)
    gq_x, gq_w = graded01(24, max(order, 6))
    npairs = E * (E + 1) // 2

    def run(p0, p1):
        return _pairs.assemble_interval_chunk(
            mesh.nodes, dofmap, kernel.s, variant, tlr, tlv, gq_x, gq_w, p0, p1
        )

    return _merge_chunks(run, _chunk_bounds(npairs), mesh.num_dof)


# ---------------------------------------------------------------------------
# interior double integral, 2d


def _triangle_affine_data(mesh: Mesh):
    """Per-element vertex coordinates, basis constants and gradients.

    The local basis on element e satisfies phi_m(x) = c[e,m] + g[e,m] . x.
    """
    P = mesh.nodes[mesh.elements]  # (E,3,2)
    c = np.empty((P.shape[0], 3))
    g = np.empty((P.shape[0], 3, 2))
    for m in range(3):
        A = P[:, m]
        B = P[:, (m + 1) % 3]
        C = P[:, (m + 2) % 3]
        v = C - B
        denom = v[:, 0] * (A[:, 1] - B[:, 1]) - v[:, 1] * (A[:, 0] - B[:, 0])
        # grad = perp(v) / cross(v, A - B)
        g[:, m, 0] = -v[:, 1] / denom
        g[:, m, 1] = v[:, 0] / denom
        c[:, m] = 1.0 - np.sum(g[:, m] * A, axis=1)
    return np.ascontiguousarray(P), c, g


def _classify_pairs(mesh: Mesh):
    """Split unordered element pairs into edge-, vertex-sharing and disjoint."""
    E = mesh.elements.shape[0]
    node_elems = {}
    for e in range(E):
        for v in mesh.elements[e]:
            node_elems.setdefault(int(v), []).append(e)
    shared = {}
    for elist in node_elems.values():
        for a in range(len(elist)):
            for b in range(a + 1, len(elist)):
                i, j = sorted((elist[a], elist[b]))
                shared[(i, j)] = shared.get((i, j), 0) + 1
    edge_pairs = sorted(p for p, c in shared.items() if c == 2)
    vertex_pairs = sorted(p for p, c in shared.items() if c == 1)
    touching = set(shared)
    di, dj = [], []
    for i in range(E):
        for j in range(i + 1, E):
            if (i, j) not in touching:
                di.append(i)
                dj.append(j)
    return edge_pairs, vertex_pairs, np.array(di, np.int64), np.array(dj, np.int64)


def _flat_grid(*rules):
    """Flattened meshgrid of 1-d rules; returns node arrays plus the weight product."""
    xs = [r[0] for r in rules]
    ws = [r[1] for r in rules]
    grids = np.meshgrid(*xs, indexing="ij")
    wgrids = np.meshgrid(*ws, indexing="ij")
    W = np.ones_like(wgrids[0])
    for w in wgrids:
        W = W * w
    return [np.ascontiguousarray(gr.ravel()) for gr in grids] + [
        np.ascontiguousarray(W.ravel())
    ]


def _slot_data(cdat, gdat, elem_nodes, slot_nodes):
    """Affine data of the slot nodes on one triangle (zero where absent)."""
    ns = len(slot_nodes)
    c = np.zeros(ns)
    g = np.zeros((ns, 2))
    lookup = {int(n): t for t, n in enumerate(elem_nodes)}
    for t, n in enumerate(slot_nodes):
        if int(n) in lookup:
            loc = lookup[int(n)]
            c[t] = cdat[loc]
            g[t] = gdat[loc]
    return c, g


def _assemble_triangles_A(mesh: Mesh, kernel: Kernel, order: int) -> np.ndarray:
    variant, tlr, tlv = _pack_kernel(kernel)
    s = kernel.s
    d = mesh.num_dof
    dofmap = _dofmap(mesh)
    P, cdat, gdat = _triangle_affine_data(mesh)
    elems = np.ascontiguousarray(mesh.elements.astype(np.int64))
    edge_pairs, vertex_pairs, di, dj = _classify_pairs(mesh)

    tabulated = variant == _pairs.VARIANT_TABULATED
    eta_rule = gauss01(4 * order)
    # the coincident radial integrand can decay as slowly as xi^(n+1+slope)
    # for tabulated profiles, so the grading must reach very small xi
    xi_tab = graded01(60, order)
    ang = gauss01(order + 2)
    tau = gauss01(3)  # the numerator is exactly quadratic in tau

    if tabulated:
        rad_edge = graded01(20, order)
        rad_vertex = rad_edge
        absorb = False
    else:
        rad_edge = gauss_jacobi01(order + 4, 2.0 - 2.0 * s)
        rad_vertex = gauss_jacobi01(order + 4, 3.0 - 2.0 * s)
        absorb = True

    # edge grid: (eta1, eta2, tau, zeta); eta1 carries the measure factor
    E1, E2, TAU, ZT, WWe = _flat_grid(ang, ang, tau, rad_edge)
    WWe = WWe * E1
    # vertex grid: (eta1, eta2, eta3, xi); eta2 carries the measure factor
    V1, V2, V3, XI, WWv = _flat_grid(ang, ang, ang, rad_vertex)
    WWv = WWv * V2

    tu, tv, tw = triangle_rule(order)

    # self pairs and disjoint pairs run as compiled chunk loops
    def run_self(lo, hi):
        return _pairs.assemble_coincident_chunk(
            P, gdat, elems, dofmap, eta_rule[0], eta_rule[1],
            xi_tab[0], xi_tab[1], s, variant, tlr, tlv, lo, hi,
        )

    A = _merge_chunks(run_self, _chunk_bounds(mesh.elements.shape[0]), d)

    def run_disjoint(lo, hi):
        return _pairs.assemble_disjoint_chunk(
            di, dj, P, cdat, gdat, elems, dofmap, tu, tv, tw,
            _ADMISSIBILITY, _MAX_SPLIT_DEPTH, s, variant, tlr, tlv, lo, hi,
        )

    A += _merge_chunks(run_disjoint, _chunk_bounds(di.size), d)

    # touching pairs: python loop over pairs with compiled per-pair cores
    for i, j in edge_pairs:
        ni, nj = elems[i], elems[j]
        shared = sorted(set(ni.tolist()) & set(nj.tolist()))
        opp_i = [n for n in ni.tolist() if n not in shared][0]
        opp_j = [n for n in nj.tolist() if n not in shared][0]
        slots = [shared[0], shared[1], opp_i, opp_j]
        c1, g1 = _slot_data(cdat[i], gdat[i], ni, slots)
        c2, g2 = _slot_data(cdat[j], gdat[j], nj, slots)
        coords = {int(n): mesh.nodes[int(n)] for n in slots}
        loc = _pairs.tri_edge_local(
            coords[slots[0]], coords[slots[1]], coords[slots[2]], coords[slots[3]],
            c1, g1, c2, g2, E1, E2, TAU, ZT, WWe, s, variant, tlr, tlv, absorb,
        )
        _scatter_pair(A, loc, slots, dofmap, 2.0)

    for i, j in vertex_pairs:
        ni, nj = elems[i], elems[j]
        w = sorted(set(ni.tolist()) & set(nj.tolist()))[0]
        rest_i = [n for n in ni.tolist() if n != w]
        rest_j = [n for n in nj.tolist() if n != w]
        slots = [w, rest_i[0], rest_i[1], rest_j[0], rest_j[1]]
        c1, g1 = _slot_data(cdat[i], gdat[i], ni, slots)
        c2, g2 = _slot_data(cdat[j], gdat[j], nj, slots)
        loc = _pairs.tri_vertex_local(
            mesh.nodes[w], mesh.nodes[rest_i[0]], mesh.nodes[rest_i[1]],
            mesh.nodes[rest_j[0]], mesh.nodes[rest_j[1]],
            c1, g1, c2, g2, V1, V2, V3, XI, WWv, s, variant, tlr, tlv, absorb,
        )
        _scatter_pair(A, loc, slots, dofmap, 2.0)

    return A


def _scatter_pair(A, loc, slots, dofmap, factor):
    for m, nm in enumerate(slots):
        dm = dofmap[nm]
        if dm < 0:
            continue
        for l, nl in enumerate(slots):
            dl = dofmap[nl]
            if dl < 0:
                continue
            A[dm, dl] += factor * loc[m, l]


# ---------------------------------------------------------------------------
# exterior-weight term


def _moment_power(lo, hi, e):
    # integral of t^e over [lo, hi], 0 <= lo < hi
    if abs(e + 1.0) < 1e-12:
        return np.log(hi / lo)
    if lo == 0.0:
        return hi ** (e + 1.0) / (e + 1.0)
    return (hi ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0)


def _exterior_interval(mesh: Mesh, kernel: Kernel, order: int):
    """Local element integrals of phi_m phi_l k(x); closed form for the model kernel."""
    (a, b), = mesh.bounds
    E = mesh.elements.shape[0]
    locs = np.zeros((E, 2, 2))
    nodes = mesh.nodes
    s = kernel.s
    for e in range(E):
        p, q = nodes[e], nodes[e + 1]
        h = q - p
        # phi coefficients on [p, q]: left hat (q-x)/h, right hat (x-p)/h
        coeffs = [(q / h, -1.0 / h), (-p / h, 1.0 / h)]
        for m in range(2):
            for l in range(m, 2):
                cm, dm = coeffs[m]
                cl, dl = coeffs[l]
                # product polynomial in x: a0 + a1 x + a2 x^2
                a0 = cm * cl
                a1 = cm * dl + cl * dm
                a2 = dm * dl
                if kernel.variant == FRACTIONAL:
                    val = 0.0
                    for (orig, sgn) in ((a, 1.0), (b, -1.0)):
                        # expand in t = sgn*(x - orig) in [lo, hi] >= 0
                        lo = (p - orig) * sgn if sgn > 0 else (orig - q)
                        hi = (q - orig) * sgn if sgn > 0 else (orig - p)
                        b0 = a0 + a1 * orig + a2 * orig * orig
                        b1 = sgn * (a1 + 2.0 * a2 * orig)
                        b2 = a2
                        if lo <= 1e-14 * h:
                            # hats of interior dofs vanish at the boundary,
                            # so the low-order coefficients are exactly zero
                            # and their (divergent) moments are skipped
                            val += b2 * _moment_power(0.0, hi, 2.0 - 2.0 * s) / (2.0 * s)
                        else:
                            val += (
                                b0 * _moment_power(lo, hi, -2.0 * s)
                                + b1 * _moment_power(lo, hi, 1.0 - 2.0 * s)
                                + b2 * _moment_power(lo, hi, 2.0 - 2.0 * s)
                            ) / (2.0 * s)
                else:
                    # split at the midpoint and grade each half toward its
                    # outer endpoint, where the weight may be near-singular
                    gx, gw = graded01(24, max(order, 6))
                    val = 0.0
                    mid = 0.5 * (p + q)
                    for x, w in (
                        (p + (mid - p) * gx, gw * (mid - p)),
                        (q - (q - mid) * gx, gw * (q - mid)),
                    ):
                        kx = np.array(
                            [exterior_weight(kernel, mesh, xi) for xi in x]
                        )
                        poly = a0 + a1 * x + a2 * x * x
                        val += float(np.sum(w * kx * poly))
                locs[e, m, l] = val
                locs[e, l, m] = val
    return locs


def _rect_exterior_weights(kernel: Kernel, mesh: Mesh, pts: np.ndarray) -> np.ndarray:
    """Vectorized exterior weight at strictly interior points of a rectangle."""
    (x0, x1), (y0, y1) = mesh.bounds
    npts = pts.shape[0]
    corners = np.array([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    ang = np.arctan2(
        corners[None, :, 1] - pts[:, 1:2], corners[None, :, 0] - pts[:, 0:1]
    )
    ang = np.sort(ang, axis=1)
    ang = np.concatenate([ang, ang[:, :1] + 2.0 * np.pi], axis=1)
    tq, wq = gauss01(24)
    out = np.zeros(npts)
    for sec in range(4):
        t0, t1 = ang[:, sec], ang[:, sec + 1]
        theta = t0[:, None] + (t1 - t0)[:, None] * tq[None, :]
        c, sn = np.cos(theta), np.sin(theta)
        with np.errstate(divide="ignore"):
            R = np.full_like(theta, np.inf)
            np.minimum(R, np.where(c > 0, (x1 - pts[:, 0:1]) / c, np.inf), out=R)
            np.minimum(R, np.where(c < 0, (x0 - pts[:, 0:1]) / c, np.inf), out=R)
            np.minimum(R, np.where(sn > 0, (y1 - pts[:, 1:2]) / sn, np.inf), out=R)
            np.minimum(R, np.where(sn < 0, (y0 - pts[:, 1:2]) / sn, np.inf), out=R)
        if kernel.variant == FRACTIONAL:
            radial = R ** (-2.0 * kernel.s) / (2.0 * kernel.s)
        else:
            from .kernel import _tabulated_tail_batch

            radial = _tabulated_tail_batch(kernel, R, moment=1)
        out += np.sum(wq[None, :] * radial, axis=1) * (t1 - t0)
    return out


def _exterior_triangles(mesh: Mesh, kernel: Kernel, order: int):
    """Adaptive per-element integrals of the 3x3 products phi_m phi_l k(x).

    Only interior-dof hats are integrated (boundary-hat rows are never
    scattered, and their products with the divergent weight need not
    exist); interior hats vanish at the boundary, which keeps the
    integrand bounded and the refinement shallow.
    """
    P, cdat, gdat = _triangle_affine_data(mesh)
    E = P.shape[0]
    tu, tv, tw = triangle_rule(max(order, 4))
    locs = np.zeros((E, 3, 3))
    dofmap = _dofmap(mesh)
    for e in range(E):
        keep = dofmap[mesh.elements[e]] >= 0
        if not np.any(keep):
            continue
        c = np.where(keep, cdat[e], 0.0)
        g = gdat[e] * keep[:, None]

        def pieces(batch):
            # batch: (B, 3, 2) triangles evaluated with one weight call
            B = batch.shape[0]
            e1 = batch[:, 1] - batch[:, 0]
            e2 = batch[:, 2] - batch[:, 0]
            det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
            x = (
                batch[:, None, 0, :]
                + tu[None, :, None] * (batch[:, None, 1, :] - batch[:, None, 0, :])
                + tv[None, :, None] * (batch[:, None, 2, :] - batch[:, None, 0, :])
            )  # (B, nq, 2)
            kx = _rect_exterior_weights(kernel, mesh, x.reshape(-1, 2))
            kx = kx.reshape(B, -1)
            phi = c[None, None, :] + x @ g.T  # (B, nq, 3)
            return det[:, None, None] * np.einsum(
                "q,bq,bqm,bql->bml", tw, kx, phi, phi
            )

        def adaptive(verts, depth, coarse):
            mids = 0.5 * (verts + np.roll(verts, -1, axis=0))
            kids = np.array(
                [
                    [verts[0], mids[0], mids[2]],
                    [mids[0], verts[1], mids[1]],
                    [mids[2], mids[1], verts[2]],
                    [mids[0], mids[1], mids[2]],
                ]
            )
            fine_pieces = pieces(kids)
            fine = fine_pieces.sum(axis=0)
            err = np.max(np.abs(fine - coarse))
            if err <= 1e-9 * max(1.0, np.max(np.abs(fine))) or depth >= 10:
                return fine
            return sum(
                adaptive(k, depth + 1, f) for k, f in zip(kids, fine_pieces)
            )

        verts = P[e]
        locs[e] = adaptive(verts, 0, pieces(verts[None])[0])
    return locs


def assemble_stiffness(
    mesh: Mesh, kernel: Kernel, quadrature_order: int = 6
) -> StiffnessSystem:
    """Assemble A (double form plus exterior term), M, and the weight diagonal.

    The quadrature order controls the Gauss point counts of the pair
    integrals; the singular directions use exact piecewise closed forms
    (1d model kernel), Gauss-Jacobi absorption (2d model kernel) or graded
    panels (tabulated kernels).
    """
    if kernel.n != mesh.n:
        raise ConfigurationError(
            f"kernel dimension {kernel.n} does not match mesh dimension {mesh.n}"
        )
    if quadrature_order < 2:
        raise ConfigurationError("quadrature_order must be at least 2")
    if mesh.num_dof > MAX_DOF:
        raise ConfigurationError(
            f"mesh has {mesh.num_dof} dofs, exceeding the dense-storage cap {MAX_DOF}"
        )

    if mesh.n == 1:
        A = _assemble_interval_A(mesh, kernel, quadrature_order)
        ext_locs = _exterior_interval(mesh, kernel, quadrature_order)
        elem_nodes = mesh.elements
    else:
        A = _assemble_triangles_A(mesh, kernel, quadrature_order)
        ext_locs = _exterior_triangles(mesh, kernel, quadrature_order)
        elem_nodes = mesh.elements

    if not np.all(np.isfinite(A)):
        bad = np.argwhere(~np.isfinite(A))[0]
        raise AssemblyError(
            f"non-finite interior pair contribution at dof pair {tuple(bad)}"
        )

    dofmap = _dofmap(mesh)
    d = mesh.num_dof
    ext_diag = np.zeros(d)
    nloc = elem_nodes.shape[1]
    for e in range(elem_nodes.shape[0]):
        for m in range(nloc):
            dm = dofmap[elem_nodes[e, m]]
            if dm < 0:
                continue
            for l in range(nloc):
                dl = dofmap[elem_nodes[e, l]]
                if dl < 0:
                    continue
                A[dm, dl] += 2.0 * ext_locs[e, m, l]
            ext_diag[dm] += ext_locs[e, m, m]

    # exact symmetry: every local block is symmetric and scattered
    # symmetrically, but enforce bit equality against rounding drift
    A = 0.5 * (A + A.T)
    M = assemble_mass(mesh)
    return StiffnessSystem(
        A=A, M=M, exterior_diag=ext_diag,
        quadrature_order=quadrature_order, s=kernel.s,
    )


def assemble_mass(mesh: Mesh) -> np.ndarray:
    """Exact P1 mass matrix on the interior dofs (closed-form local blocks)."""
    d = mesh.num_dof
    dofmap = _dofmap(mesh)
    M = np.zeros((d, d))
    measures = mesh.measures
    if mesh.n == 1:
        local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    else:
        local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    nloc = mesh.elements.shape[1]
    for e in range(mesh.elements.shape[0]):
        scale = measures[e]
        for m in range(nloc):
            dm = dofmap[mesh.elements[e, m]]
            if dm < 0:
                continue
            for l in range(nloc):
                dl = dofmap[mesh.elements[e, l]]
                if dl < 0:
                    continue
                M[dm, dl] += scale * local[m, l]
    return M


def assemble_load(
    mesh: Mesh, h_field: HField, g, u: np.ndarray, quadrature_order: int = 6
) -> np.ndarray:
    """Load vector b_i = integral of h(x) g(u_h(x)) phi_i(x) dx.

    g must accept NumPy arrays; u is the interior coefficient vector of
    the P1 interpolant u_h.
    """
    if h_field.values.shape[0] != mesh.elements.shape[0]:
        raise ConfigurationError("h field size does not match element count")
    dofmap = _dofmap(mesh)
    full = mesh.full_vector(np.asarray(u, dtype=float))
    b = np.zeros(mesh.num_dof)
    if mesh.n == 1:
        tq, wq = gauss01(max(quadrature_order, 4))
        p = mesh.nodes[mesh.elements[:, 0]]
        q = mesh.nodes[mesh.elements[:, 1]]
        h = (q - p)[:, None]
        x = p[:, None] + h * tq[None, :]
        phi = np.stack([1.0 - tq, tq])  # (2, nq)
        uh = (
            full[mesh.elements[:, 0]][:, None] * phi[0][None, :]
            + full[mesh.elements[:, 1]][:, None] * phi[1][None, :]
        )
        vals = h_field.values[:, None] * np.asarray(g(uh))
        for m in range(2):
            contrib = np.sum(wq[None, :] * vals * phi[m][None, :], axis=1) * h[:, 0]
            dm = dofmap[mesh.elements[:, m]]
            np.add.at(b, dm[dm >= 0], contrib[dm >= 0])
    else:
        tu, tv, tw = triangle_rule(max(quadrature_order, 4))
        P = mesh.nodes[mesh.elements]
        lam = np.stack([1.0 - tu - tv, tu, tv])  # (3, nq)
        uh = np.einsum("em,mq->eq", full[mesh.elements], lam)
        vals = h_field.values[:, None] * np.asarray(g(uh))
        scale = 2.0 * mesh.measures
        for m in range(3):
            contrib = np.sum(tw[None, :] * vals * lam[m][None, :], axis=1) * scale
            dm = dofmap[mesh.elements[:, m]]
            np.add.at(b, dm[dm >= 0], contrib[dm >= 0])
    return b
