"""Conforming P1 meshes of an interval or an axis-aligned rectangle.

Homogeneous nonlocal Dirichlet data (u = 0 outside Omega) is encoded by
restricting the degrees of freedom to strictly interior nodes; the hat
function of an interior node, extended by zero, is an admissible trial
function for the kernel-weighted energy space.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def _cross2(a, b):
    """z-component of the cross product of stacked 2-vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class Mesh:
    n: int
    nodes: np.ndarray          # (N,) in 1d, (N,2) in 2d
    elements: np.ndarray       # (E,2) segments or (E,3) triangles
    interior_dof: np.ndarray   # node indices strictly inside Omega
    bounds: tuple              # ((a,b),) or ((x0,x1),(y0,y1))

    @property
    def num_dof(self) -> int:
        return int(self.interior_dof.size)

    @property
    def measures(self) -> np.ndarray:
        if self.n == 1:
            a = self.nodes[self.elements]
            return np.abs(a[:, 1] - a[:, 0])
        p = self.nodes[self.elements]
        return 0.5 * np.abs(
            _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        )

    @property
    def h_max(self) -> float:
        return float(np.max(self._diameters()))

    @property
    def h_min(self) -> float:
        return float(np.min(self._diameters()))

    def _diameters(self):
        if self.n == 1:
            return self.measures
        p = self.nodes[self.elements]
        d = [np.linalg.norm(p[:, i] - p[:, j], axis=1) for i, j in ((0, 1), (1, 2), (2, 0))]
        return np.max(d, axis=0)

    @property
    def domain_measure(self) -> float:
        if self.n == 1:
            (a, b), = self.bounds
            return b - a
        (x0, x1), (y0, y1) = self.bounds
        return (x1 - x0) * (y1 - y0)

    def full_vector(self, u_interior: np.ndarray) -> np.ndarray:
        """Nodal vector over all mesh nodes, zero on boundary nodes."""
        full = np.zeros(len(self.nodes) if self.n == 1 else self.nodes.shape[0])
        full[self.interior_dof] = u_interior
        return full

    def dilate(self, c: float) -> "Mesh":
        """Matched mesh of the dilated domain c*Omega (same connectivity)."""
        bounds = tuple((c * lo, c * hi) for lo, hi in self.bounds)
        return Mesh(self.n, self.nodes * c, self.elements, self.interior_dof, bounds)


def _check_regularity(mesh: Mesh):
    if mesh.h_max / mesh.h_min > 10.0:
        raise ConfigurationError(
            f"mesh violates shape regularity guard: h_max/h_min = {mesh.h_max / mesh.h_min:.2f} > 10"
        )


def build_interval_mesh(a: float, b: float, cells: int) -> Mesh:
    """Uniform mesh of (a, b) with `cells` segments and cells-1 interior dofs."""
    if cells < 2:
        raise ConfigurationError("interval mesh needs at least 2 cells")
    if not a < b:
        raise ConfigurationError("interval endpoints must satisfy a < b")
    nodes = np.linspace(a, b, cells + 1)
    elements = np.column_stack([np.arange(cells), np.arange(1, cells + 1)])
    interior = np.arange(1, cells)
    mesh = Mesh(1, nodes, elements, interior, ((a, b),))
    _check_regularity(mesh)
    return mesh


def build_rectangle_mesh(x_range, y_range, cells_x: int, cells_y: int) -> Mesh:
    """Triangulated rectangle with alternating cell diagonals.

    Nodes form a tensor grid; each cell is split into two triangles along
    a diagonal whose direction alternates with the cell parity.  Interior
    dofs are the strict-interior grid nodes.
    """
    x0, x1 = map(float, x_range)
    y0, y1 = map(float, y_range)
    if not (x0 < x1 and y0 < y1):
        raise ConfigurationError("rectangle ranges must be nondegenerate")
    if cells_x < 2 or cells_y < 2:
        raise ConfigurationError("rectangle mesh needs at least 2 cells per direction")
    xs = np.linspace(x0, x1, cells_x + 1)
    ys = np.linspace(y0, y1, cells_y + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (cells_y + 1) + j

    tris = []
    for i in range(cells_x):
        for j in range(cells_y):
            p00, p10 = nid(i, j), nid(i + 1, j)
            p01, p11 = nid(i, j + 1), nid(i + 1, j + 1)
            if (i + j) % 2 == 0:
                tris.append((p00, p10, p11))
                tris.append((p00, p11, p01))
            else:
                tris.append((p00, p10, p01))
                tris.append((p10, p11, p01))
    elements = np.array(tris, dtype=np.int64)

    ii, jj = np.meshgrid(np.arange(1, cells_x), np.arange(1, cells_y), indexing="ij")
    interior = (ii * (cells_y + 1) + jj).ravel()
    mesh = Mesh(2, nodes, elements, np.sort(interior), ((x0, x1), (y0, y1)))
    _check_regularity(mesh)
    return mesh


def eval_p1(mesh: Mesh, nodal: np.ndarray, points) -> np.ndarray:
    """Evaluate the P1 interpolant with given nodal values at points inside Omega."""
    pts = np.atleast_2d(np.asarray(points, dtype=float)) if mesh.n == 2 else None
    if mesh.n == 1:
        x = np.atleast_1d(np.asarray(points, dtype=float))
        nodes = mesh.nodes
        idx = np.clip(np.searchsorted(nodes, x) - 1, 0, len(nodes) - 2)
        a, b = nodes[idx], nodes[idx + 1]
        t = (x - a) / (b - a)
        return (1 - t) * nodal[idx] + t * nodal[idx + 1]
    out = np.empty(pts.shape[0])
    p = mesh.nodes[mesh.elements]
    for k, pt in enumerate(pts):
        val = None
        for e in range(mesh.elements.shape[0]):
            v0, v1, v2 = p[e]
            det = _cross2(v1 - v0, v2 - v0)
            l1 = _cross2(pt - v0, v2 - v0) / det
            l2 = _cross2(v1 - v0, pt - v0) / det
            l0 = 1.0 - l1 - l2
            if min(l0, l1, l2) >= -1e-12:
                ns = mesh.elements[e]
                val = l0 * nodal[ns[0]] + l1 * nodal[ns[1]] + l2 * nodal[ns[2]]
                break
        if val is None:
            raise ValueError(f"point {pt} is outside the mesh")
        out[k] = val
    return out
