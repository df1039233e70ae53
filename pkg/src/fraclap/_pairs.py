"""Element-pair integrals of the kernel-weighted double form.

Strategy: reduce every pair integral to relative coordinates z = x - y so
the kernel singularity sits at z = 0 and the basis-difference numerator
supplies the cancellation.

1d: the inner x-integral of the quadratic numerator over the moving
intersection interval is a piecewise cubic Q(z); for the model power
kernel the piece integrals are closed-form power moments, for tabulated
profiles they are graded Gauss panels.

2d: coincident triangles collapse (the numerator is affine on a single
element) to three smooth 1-d direction integrals; edge- and
vertex-sharing triangles use Duffy-type maps built so that x - y =
xi * m(eta) exactly, with |m| bounded below, and the remaining algebraic
xi-power is absorbed by Gauss-Jacobi weights (fractional) or graded
panels (tabulated); disjoint pairs use tensor triangle Gauss with
distance-based subdivision.

All functions here are numba-njit compiled when the accelerated backend
is active and run as plain NumPy/Python otherwise (FRACLAP_NO_NUMBA=1).
"""

import numpy as np

from ._backend import maybe_njit

VARIANT_FRACTIONAL = 0
VARIANT_TABULATED = 1


@maybe_njit
def _k_radial_scalar(r, n, s, variant, tab_logr, tab_logv):
    if variant == VARIANT_FRACTIONAL:
        return r ** (-(n + 2.0 * s))
    lr = np.log(r)
    nt = tab_logr.size
    if lr <= tab_logr[0]:
        slope = (tab_logv[1] - tab_logv[0]) / (tab_logr[1] - tab_logr[0])
        return np.exp(tab_logv[0] + slope * (lr - tab_logr[0]))
    if lr >= tab_logr[nt - 1]:
        slope = (tab_logv[nt - 1] - tab_logv[nt - 2]) / (
            tab_logr[nt - 1] - tab_logr[nt - 2]
        )
        return np.exp(tab_logv[nt - 1] + slope * (lr - tab_logr[nt - 1]))
    lo, hi = 0, nt - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tab_logr[mid] <= lr:
            lo = mid
        else:
            hi = mid
    t = (lr - tab_logr[lo]) / (tab_logr[lo + 1] - tab_logr[lo])
    return np.exp(tab_logv[lo] * (1.0 - t) + tab_logv[lo + 1] * t)


@maybe_njit
def _k_radial_array(r, n, s, variant, tab_logr, tab_logv):
    out = np.empty(r.size)
    for i in range(r.size):
        out[i] = _k_radial_scalar(r[i], n, s, variant, tab_logr, tab_logv)
    return out


@maybe_njit
def _power_moment(lo, hi, e):
    # integral of z^e over [lo, hi], 0 < lo < hi, with the log special case
    if abs(e + 1.0) < 1e-12:
        return np.log(hi / lo)
    return (hi ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0)


@maybe_njit
def _piece_moments_fractional(t0, t1, s, touches_zero, out4):
    # out4[k] = integral over [t0,t1] of |z|^(-1-2s) z^k dz, k = 0..3.
    # Pieces with an endpoint at 0 only arise for touching pairs, where the
    # numerator polynomial vanishes to order >= 2; the divergent low-order
    # moments are paired with analytically-zero coefficients and are set to 0.
    for k in range(4):
        e = k - 1.0 - 2.0 * s
        if touches_zero and k <= 1:
            out4[k] = 0.0
            continue
        if t0 >= 0.0:
            lo = t0 if t0 > 0.0 else 0.0
            if lo == 0.0:
                # convergent pure power from 0
                out4[k] = t1 ** (e + 1.0) / (e + 1.0)
            else:
                out4[k] = _power_moment(lo, t1, e)
        else:
            # z < 0 piece: substitute w = -z
            hi = -t0
            lo = -t1 if t1 < 0.0 else 0.0
            sign = 1.0 if k % 2 == 0 else -1.0
            if lo == 0.0:
                out4[k] = sign * hi ** (e + 1.0) / (e + 1.0)
            else:
                out4[k] = sign * _power_moment(lo, hi, e)


@maybe_njit
def _cubic_from_H(u0, u1, p0, p1, p2, q0, q1, r, out4):
    # coefficients in z of H(U(z)) for U = u0 + u1 z, where
    # H(x) = p(z) x + q(z) x^2/2 + r x^3/3, p quadratic, q affine in z
    U2_0, U2_1, U2_2 = u0 * u0, 2.0 * u0 * u1, u1 * u1
    U3_0, U3_1, U3_2, U3_3 = u0**3, 3.0 * u0 * u0 * u1, 3.0 * u0 * u1 * u1, u1**3
    out4[0] = p0 * u0 + 0.5 * q0 * U2_0 + r * U3_0 / 3.0
    out4[1] = p0 * u1 + p1 * u0 + 0.5 * (q0 * U2_1 + q1 * U2_0) + r * U3_1 / 3.0
    out4[2] = p1 * u1 + p2 * u0 + 0.5 * (q0 * U2_2 + q1 * U2_1) + r * U3_2 / 3.0
    out4[3] = p2 * u1 + 0.5 * q1 * U2_2 + r * U3_3 / 3.0


@maybe_njit
def _pair_index_decode(p, E):
    # p-th unordered pair (i <= j) of E elements, row-major over i
    i = 0
    rem = p
    while rem >= E - i:
        rem -= E - i
        i += 1
    return i, i + rem


@maybe_njit
def assemble_interval_chunk(
    nodes, dofmap, s, variant, tab_logr, tab_logv, gq_x, gq_w, p0, p1
):
    """COO contributions of unordered element pairs [p0, p1) on a 1-d mesh.

    gq_x/gq_w: graded [0,1] rule used for tabulated kernels (unused for the
    model kernel, whose piece integrals are closed-form).
    """
    E = nodes.size - 1
    cap = (p1 - p0) * 16
    rows = np.empty(cap, np.int64)
    cols = np.empty(cap, np.int64)
    vals = np.empty(cap, np.float64)
    nnz = 0

    ln = np.empty(4, np.int64)
    cx = np.empty(4, np.float64)
    dx = np.empty(4, np.float64)
    cy = np.empty(4, np.float64)
    dy = np.empty(4, np.float64)
    bps = np.empty(5, np.float64)
    mom = np.empty(4, np.float64)
    cu = np.empty(4, np.float64)
    cl = np.empty(4, np.float64)
    loc = np.empty((4, 4), np.float64)

    for p in range(p0, p1):
        i, j = _pair_index_decode(p, E)
        a1, b1 = nodes[i], nodes[i + 1]
        a2, b2 = nodes[j], nodes[j + 1]
        h1, h2 = b1 - a1, b2 - a2
        S = a1  # shift for conditioning
        a1s, b1s = 0.0, h1
        a2s, b2s = a2 - S, b2 - S

        # local union of nodes with per-side affine data (phi = c + d x)
        for t in range(4):
            cx[t] = 0.0
            dx[t] = 0.0
            cy[t] = 0.0
            dy[t] = 0.0
        ln[0] = i
        cx[0] = b1s / h1
        dx[0] = -1.0 / h1
        ln[1] = i + 1
        cx[1] = -a1s / h1
        dx[1] = 1.0 / h1
        nl = 2
        for side in range(2):
            g = j + side
            c = (b2s / h2) if side == 0 else (-a2s / h2)
            d = (-1.0 / h2) if side == 0 else (1.0 / h2)
            found = -1
            for t in range(nl):
                if ln[t] == g:
                    found = t
            if found >= 0:
                cy[found] = c
                dy[found] = d
            else:
                ln[nl] = g
                cy[nl] = c
                dy[nl] = d
                nl += 1

        # breakpoints of the intersection interval in z = x - y
        zmin, zmax = a1s - b2s, b1s - a2s
        bps[0] = zmin
        bps[1] = a1s - a2s
        bps[2] = b1s - b2s
        bps[3] = zmax
        nbp = 4
        if zmin < 0.0 < zmax:
            bps[4] = 0.0
            nbp = 5
        # insertion sort of the small array
        for u in range(1, nbp):
            key = bps[u]
            v = u - 1
            while v >= 0 and bps[v] > key:
                bps[v + 1] = bps[v]
                v -= 1
            bps[v + 1] = key

        for m in range(nl):
            for l in range(nl):
                loc[m, l] = 0.0
        scale = max(h1, h2)
        eps0 = 1e-13 * scale

        for piece in range(nbp - 1):
            t0, t1 = bps[piece], bps[piece + 1]
            if t1 - t0 <= eps0:
                continue
            zm = 0.5 * (t0 + t1)
            if b1s <= b2s + zm:
                u0, u1c = b1s, 0.0
            else:
                u0, u1c = b2s, 1.0
            if a1s >= a2s + zm:
                l0, l1c = a1s, 0.0
            else:
                l0, l1c = a2s, 1.0
            touches = abs(t0) <= eps0 or abs(t1) <= eps0

            if variant == VARIANT_FRACTIONAL:
                _piece_moments_fractional(t0, t1, s, touches, mom)

            for m in range(nl):
                am0 = cx[m] - cy[m]
                am1 = dy[m]
                Bm = dx[m] - dy[m]
                for l in range(m, nl):
                    al0 = cx[l] - cy[l]
                    al1 = dy[l]
                    Bl = dx[l] - dy[l]
                    p_0 = am0 * al0
                    p_1 = am0 * al1 + am1 * al0
                    p_2 = am1 * al1
                    q_0 = am0 * Bl + al0 * Bm
                    q_1 = am1 * Bl + al1 * Bm
                    rr = Bm * Bl
                    _cubic_from_H(u0, u1c, p_0, p_1, p_2, q_0, q_1, rr, cu)
                    _cubic_from_H(l0, l1c, p_0, p_1, p_2, q_0, q_1, rr, cl)
                    c0 = cu[0] - cl[0]
                    c1 = cu[1] - cl[1]
                    c2 = cu[2] - cl[2]
                    c3 = cu[3] - cl[3]
                    if touches:
                        c0 = 0.0
                        c1 = 0.0
                    if variant == VARIANT_FRACTIONAL:
                        val = c0 * mom[0] + c1 * mom[1] + c2 * mom[2] + c3 * mom[3]
                    else:
                        # graded panels toward the singular endpoint when the
                        # piece touches 0, plain otherwise (rule is on [0,1])
                        val = 0.0
                        width = t1 - t0
                        toward_left = abs(t0) <= eps0
                        for qn in range(gq_x.size):
                            tq = gq_x[qn]
                            if toward_left or not (abs(t1) <= eps0):
                                z = t0 + width * tq
                            else:
                                z = t1 - width * tq
                            az = abs(z)
                            if az < 1e-300:
                                continue
                            Qz = (
                                (p_0 + p_1 * z + p_2 * z * z) * ((u0 + u1c * z) - (l0 + l1c * z))
                                + 0.5 * (q_0 + q_1 * z) * ((u0 + u1c * z) ** 2 - (l0 + l1c * z) ** 2)
                                + rr * ((u0 + u1c * z) ** 3 - (l0 + l1c * z) ** 3) / 3.0
                            )
                            val += (
                                gq_w[qn]
                                * width
                                * _k_radial_scalar(az, 1, s, variant, tab_logr, tab_logv)
                                * Qz
                            )
                    loc[m, l] += val
                    if l != m:
                        loc[l, m] += val

        factor = 1.0 if i == j else 2.0
        for m in range(nl):
            dm = dofmap[ln[m]]
            if dm < 0:
                continue
            for l in range(nl):
                dl = dofmap[ln[l]]
                if dl < 0:
                    continue
                rows[nnz] = dm
                cols[nnz] = dl
                vals[nnz] = factor * loc[m, l]
                nnz += 1

    return rows[:nnz], cols[:nnz], vals[:nnz]


@maybe_njit
def tri_coincident_local(
    V, G, eta_x, eta_w, xi_x, xi_w, s, variant, tab_logr, tab_logv
):
    """Local 3x3 pair matrix for a triangle against itself.

    V: (3,2) vertices, G: (3,2) physical basis gradients.  The relative
    coordinate z sweeps three direction families d(eta); for the model
    kernel the xi-integral separates into a Beta-function constant.
    """
    q1x, q1y = V[1, 0] - V[0, 0], V[1, 1] - V[0, 1]
    q2x, q2y = V[2, 0] - V[1, 0], V[2, 1] - V[1, 1]
    detB = q1x * q2y - q1y * q2x
    out = np.zeros((3, 3))
    for fam in range(3):
        for k in range(eta_x.size):
            eta = eta_x[k]
            if fam == 0:
                dx_, dy_ = q1x + eta * q2x, q1y + eta * q2y
            elif fam == 1:
                dx_, dy_ = eta * q1x + q2x, eta * q1y + q2y
            else:
                dx_, dy_ = eta * q1x + (eta - 1.0) * q2x, eta * q1y + (eta - 1.0) * q2y
            r = np.sqrt(dx_ * dx_ + dy_ * dy_)
            if variant == VARIANT_FRACTIONAL:
                kf = r ** (-2.0 - 2.0 * s)
            else:
                # numeric xi panel rule for non-power profiles
                kf = 0.0
                for kx in range(xi_x.size):
                    xi = xi_x[kx]
                    kf += (
                        xi_w[kx]
                        * xi**3
                        * (1.0 - xi) ** 2
                        * 0.5
                        * _k_radial_scalar(xi * r, 2, s, variant, tab_logr, tab_logv)
                    )
            w = eta_w[k] * kf
            for m in range(3):
                num_m = G[m, 0] * dx_ + G[m, 1] * dy_
                for l in range(m, 3):
                    val = w * num_m * (G[l, 0] * dx_ + G[l, 1] * dy_)
                    out[m, l] += val
                    if l != m:
                        out[l, m] += val
    if variant == VARIANT_FRACTIONAL:
        cs = 1.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s))
    else:
        cs = 1.0
    return out * (2.0 * detB * detB * cs)


@maybe_njit
def _edge_half(
    P0, P1, Pa, Pb, cX, gX, cY, gY,
    E1, E2, TAU, ZT, WW, s, variant, tab_logr, tab_logv, absorb, out,
):
    # one delta-sign half of an edge-sharing pair; x lives on (P0,P1,Pa),
    # y on (P0,P1,Pb).  WW carries all 1-d weights, the eta1 measure factor
    # and (when absorb) the inverse Gauss-Jacobi weight power of zeta.
    ex, ey = P1[0] - P0[0], P1[1] - P0[1]
    ax, ay = Pa[0] - P0[0], Pa[1] - P0[1]
    bx, by = Pb[0] - P0[0], Pb[1] - P0[1]
    jac = abs(ex * ay - ey * ax) * abs(ex * by - ey * bx)
    beta_pow = 2.0 - 2.0 * s
    for k in range(E1.size):
        e1, e2, tau, zt = E1[k], E2[k], TAU[k], ZT[k]
        s1 = 1.0 - e1
        s2 = e1 * (1.0 - e2)
        s3 = e1 * e2
        mx = s1 * ex + s2 * ax - s3 * bx
        my = s1 * ey + s2 * ay - s3 * by
        mn = np.sqrt(mx * mx + my * my)
        cmax = s3 if s3 > s1 + s2 else s1 + s2
        ximax = 1.0 / cmax
        xi = ximax * zt
        rest = 1.0 - xi * cmax
        u = rest * tau
        x0 = P0[0] + (u + xi * s1) * ex + xi * s2 * ax
        x1_ = P0[1] + (u + xi * s1) * ey + xi * s2 * ay
        y0 = P0[0] + u * ex + xi * s3 * bx
        y1_ = P0[1] + u * ey + xi * s3 * by
        kv = _k_radial_scalar(xi * mn, 2, s, variant, tab_logr, tab_logv)
        wt = WW[k] * xi * xi * rest * ximax * kv
        if absorb:
            wt /= zt**beta_pow
        wt *= jac
        for m in range(4):
            fdm = cX[m] + gX[m, 0] * x0 + gX[m, 1] * x1_ - (
                cY[m] + gY[m, 0] * y0 + gY[m, 1] * y1_
            )
            for l in range(m, 4):
                fdl = cX[l] + gX[l, 0] * x0 + gX[l, 1] * x1_ - (
                    cY[l] + gY[l, 0] * y0 + gY[l, 1] * y1_
                )
                out[m, l] += wt * fdm * fdl
    for m in range(4):
        for l in range(m):
            out[m, l] = out[l, m]


@maybe_njit
def tri_edge_local(
    P0, P1, Pa, Pb, c1, g1, c2, g2,
    E1, E2, TAU, ZT, WW, s, variant, tab_logr, tab_logv, absorb,
):
    """Full ordered-pair integral for edge-sharing triangles (both halves).

    Union slots: [shared0, shared1, opposite of T1, opposite of T2]; c1/g1
    are the slot affine data on T1, c2/g2 on T2 (zero where absent).
    """
    out = np.zeros((4, 4))
    _edge_half(
        P0, P1, Pa, Pb, c1, g1, c2, g2,
        E1, E2, TAU, ZT, WW, s, variant, tab_logr, tab_logv, absorb, out,
    )
    _edge_half(
        P0, P1, Pb, Pa, c2, g2, c1, g1,
        E1, E2, TAU, ZT, WW, s, variant, tab_logr, tab_logv, absorb, out,
    )
    return out


@maybe_njit
def _vertex_half(
    W, A1, A2, B1, B2, cX, gX, cY, gY,
    E1, E2, E3, XI, WW, s, variant, tab_logr, tab_logv, absorb, out,
):
    a1x, a1y = A1[0] - W[0], A1[1] - W[1]
    a2x, a2y = A2[0] - W[0], A2[1] - W[1]
    b1x, b1y = B1[0] - W[0], B1[1] - W[1]
    b2x, b2y = B2[0] - W[0], B2[1] - W[1]
    jac = abs(a1x * a2y - a1y * a2x) * abs(b1x * b2y - b1y * b2x)
    beta_pow = 3.0 - 2.0 * s
    for k in range(E1.size):
        e1, e2, e3, xi = E1[k], E2[k], E3[k], XI[k]
        mx = (1.0 - e1) * a1x + e1 * a2x - e2 * ((1.0 - e3) * b1x + e3 * b2x)
        my = (1.0 - e1) * a1y + e1 * a2y - e2 * ((1.0 - e3) * b1y + e3 * b2y)
        mn = np.sqrt(mx * mx + my * my)
        x0 = W[0] + xi * ((1.0 - e1) * a1x + e1 * a2x)
        x1_ = W[1] + xi * ((1.0 - e1) * a1y + e1 * a2y)
        y0 = W[0] + xi * e2 * ((1.0 - e3) * b1x + e3 * b2x)
        y1_ = W[1] + xi * e2 * ((1.0 - e3) * b1y + e3 * b2y)
        kv = _k_radial_scalar(xi * mn, 2, s, variant, tab_logr, tab_logv)
        wt = WW[k] * xi**3 * kv
        if absorb:
            wt /= xi**beta_pow
        wt *= jac
        for m in range(5):
            fdm = cX[m] + gX[m, 0] * x0 + gX[m, 1] * x1_ - (
                cY[m] + gY[m, 0] * y0 + gY[m, 1] * y1_
            )
            for l in range(m, 5):
                fdl = cX[l] + gX[l, 0] * x0 + gX[l, 1] * x1_ - (
                    cY[l] + gY[l, 0] * y0 + gY[l, 1] * y1_
                )
                out[m, l] += wt * fdm * fdl
    for m in range(5):
        for l in range(m):
            out[m, l] = out[l, m]


@maybe_njit
def tri_vertex_local(
    W, A1, A2, B1, B2, c1, g1, c2, g2,
    E1, E2, E3, XI, WW, s, variant, tab_logr, tab_logv, absorb,
):
    """Full ordered-pair integral for vertex-sharing triangles (both halves).

    Union slots: [shared, A1, A2, B1, B2]; c1/g1 slot data on T1, c2/g2 on T2.
    """
    out = np.zeros((5, 5))
    _vertex_half(
        W, A1, A2, B1, B2, c1, g1, c2, g2,
        E1, E2, E3, XI, WW, s, variant, tab_logr, tab_logv, absorb, out,
    )
    _vertex_half(
        W, B1, B2, A1, A2, c2, g2, c1, g1,
        E1, E2, E3, XI, WW, s, variant, tab_logr, tab_logv, absorb, out,
    )
    return out


@maybe_njit
def tri_disjoint_local(
    V1, V2, c1, g1, c2, g2, tu, tv, tw, adm, max_depth,
    s, variant, tab_logr, tab_logv,
):
    """Local 6x6 matrix for a disjoint triangle pair via admissible Gauss.

    Slots 0..2 are the T1 basis (x side), 3..5 the T2 basis (y side); the
    difference structure gives the sign pattern.  Inadmissible subpairs are
    split 4-way on the larger triangle up to max_depth.
    """
    out = np.zeros((6, 6))
    cap = 8192
    stA = np.empty((cap, 3, 2))
    stB = np.empty((cap, 3, 2))
    stD = np.empty(cap, np.int64)
    stA[0] = V1
    stB[0] = V2
    stD[0] = 0
    top = 1
    nq = tu.size
    fd = np.empty(6)
    while top > 0:
        top -= 1
        A = stA[top].copy()
        B = stB[top].copy()
        dep = stD[top]
        cA0 = (A[0, 0] + A[1, 0] + A[2, 0]) / 3.0
        cA1 = (A[0, 1] + A[1, 1] + A[2, 1]) / 3.0
        cB0 = (B[0, 0] + B[1, 0] + B[2, 0]) / 3.0
        cB1 = (B[0, 1] + B[1, 1] + B[2, 1]) / 3.0
        rA = 0.0
        rB = 0.0
        for t in range(3):
            dA = np.sqrt((A[t, 0] - cA0) ** 2 + (A[t, 1] - cA1) ** 2)
            dB = np.sqrt((B[t, 0] - cB0) ** 2 + (B[t, 1] - cB1) ** 2)
            if dA > rA:
                rA = dA
            if dB > rB:
                rB = dB
        dc = np.sqrt((cA0 - cB0) ** 2 + (cA1 - cB1) ** 2)
        sep = dc - rA - rB
        big = rA if rA > rB else rB
        if sep >= adm * 2.0 * big or dep >= max_depth or top + 4 >= cap:
            detA = abs(
                (A[1, 0] - A[0, 0]) * (A[2, 1] - A[0, 1])
                - (A[1, 1] - A[0, 1]) * (A[2, 0] - A[0, 0])
            )
            detB_ = abs(
                (B[1, 0] - B[0, 0]) * (B[2, 1] - B[0, 1])
                - (B[1, 1] - B[0, 1]) * (B[2, 0] - B[0, 0])
            )
            for qa in range(nq):
                xa0 = A[0, 0] + tu[qa] * (A[1, 0] - A[0, 0]) + tv[qa] * (A[2, 0] - A[0, 0])
                xa1 = A[0, 1] + tu[qa] * (A[1, 1] - A[0, 1]) + tv[qa] * (A[2, 1] - A[0, 1])
                for m in range(3):
                    fd[m] = c1[m] + g1[m, 0] * xa0 + g1[m, 1] * xa1
                for qb in range(nq):
                    yb0 = B[0, 0] + tu[qb] * (B[1, 0] - B[0, 0]) + tv[qb] * (B[2, 0] - B[0, 0])
                    yb1 = B[0, 1] + tu[qb] * (B[1, 1] - B[0, 1]) + tv[qb] * (B[2, 1] - B[0, 1])
                    r = np.sqrt((xa0 - yb0) ** 2 + (xa1 - yb1) ** 2)
                    kv = _k_radial_scalar(r, 2, s, variant, tab_logr, tab_logv)
                    w = tw[qa] * tw[qb] * detA * detB_ * kv
                    for m in range(3):
                        fd[3 + m] = -(c2[m] + g2[m, 0] * yb0 + g2[m, 1] * yb1)
                    for m in range(6):
                        for l in range(m, 6):
                            out[m, l] += w * fd[m] * fd[l]
        else:
            # split the larger triangle at edge midpoints
            if rA >= rB:
                T = A
                other_is_B = True
            else:
                T = B
                other_is_B = False
            m01x, m01y = 0.5 * (T[0, 0] + T[1, 0]), 0.5 * (T[0, 1] + T[1, 1])
            m12x, m12y = 0.5 * (T[1, 0] + T[2, 0]), 0.5 * (T[1, 1] + T[2, 1])
            m20x, m20y = 0.5 * (T[2, 0] + T[0, 0]), 0.5 * (T[2, 1] + T[0, 1])
            kids = np.empty((4, 3, 2))
            kids[0, 0, 0], kids[0, 0, 1] = T[0, 0], T[0, 1]
            kids[0, 1, 0], kids[0, 1, 1] = m01x, m01y
            kids[0, 2, 0], kids[0, 2, 1] = m20x, m20y
            kids[1, 0, 0], kids[1, 0, 1] = m01x, m01y
            kids[1, 1, 0], kids[1, 1, 1] = T[1, 0], T[1, 1]
            kids[1, 2, 0], kids[1, 2, 1] = m12x, m12y
            kids[2, 0, 0], kids[2, 0, 1] = m20x, m20y
            kids[2, 1, 0], kids[2, 1, 1] = m12x, m12y
            kids[2, 2, 0], kids[2, 2, 1] = T[2, 0], T[2, 1]
            kids[3, 0, 0], kids[3, 0, 1] = m01x, m01y
            kids[3, 1, 0], kids[3, 1, 1] = m12x, m12y
            kids[3, 2, 0], kids[3, 2, 1] = m20x, m20y
            for kk in range(4):
                if other_is_B:
                    stA[top] = kids[kk]
                    stB[top] = B
                else:
                    stA[top] = A
                    stB[top] = kids[kk]
                stD[top] = dep + 1
                top += 1
    for m in range(6):
        for l in range(m):
            out[m, l] = out[l, m]
    return out


@maybe_njit
def assemble_disjoint_chunk(
    pi, pj, verts, cdat, gdat, elems, dofmap, tu, tv, tw, adm, max_depth,
    s, variant, tab_logr, tab_logv, lo, hi,
):
    """COO contributions of the disjoint pairs pi[lo:hi], pj[lo:hi].

    Each unordered pair contributes twice (both orderings of the double
    integral), hence the factor 2 on scatter.
    """
    cap = (hi - lo) * 36
    rows = np.empty(cap, np.int64)
    cols = np.empty(cap, np.int64)
    vals = np.empty(cap, np.float64)
    nnz = 0
    gdof = np.empty(6, np.int64)
    for p in range(lo, hi):
        i, j = pi[p], pj[p]
        loc = tri_disjoint_local(
            verts[i], verts[j], cdat[i], gdat[i], cdat[j], gdat[j],
            tu, tv, tw, adm, max_depth, s, variant, tab_logr, tab_logv,
        )
        for t in range(3):
            gdof[t] = dofmap[elems[i, t]]
            gdof[3 + t] = dofmap[elems[j, t]]
        for m in range(6):
            if gdof[m] < 0:
                continue
            for l in range(6):
                if gdof[l] < 0:
                    continue
                rows[nnz] = gdof[m]
                cols[nnz] = gdof[l]
                vals[nnz] = 2.0 * loc[m, l]
                nnz += 1
    return rows[:nnz], cols[:nnz], vals[:nnz]


@maybe_njit
def assemble_coincident_chunk(
    verts, gdat, elems, dofmap, eta_x, eta_w, xi_x, xi_w,
    s, variant, tab_logr, tab_logv, lo, hi,
):
    """COO contributions of the self-pairs of elements [lo, hi)."""
    cap = (hi - lo) * 9
    rows = np.empty(cap, np.int64)
    cols = np.empty(cap, np.int64)
    vals = np.empty(cap, np.float64)
    nnz = 0
    for e in range(lo, hi):
        loc = tri_coincident_local(
            verts[e], gdat[e], eta_x, eta_w, xi_x, xi_w,
            s, variant, tab_logr, tab_logv,
        )
        for m in range(3):
            dm = dofmap[elems[e, m]]
            if dm < 0:
                continue
            for l in range(3):
                dl = dofmap[elems[e, l]]
                if dl < 0:
                    continue
                rows[nnz] = dm
                cols[nnz] = dl
                vals[nnz] = loc[m, l]
                nnz += 1
    return rows[:nnz], cols[:nnz], vals[:nnz]
