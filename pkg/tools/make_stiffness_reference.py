"""Regenerate tests/data/stiffness_1d_reference.json.

Brute-force adaptive quadrature (scipy.integrate.quad) of every stiffness
entry on the unit interval: the double form is integrated as nested 1-d
adaptive quadratures with the mesh nodes and the inner variable passed as
singular points, and the exterior term uses the closed-form weight
k(x) = ((x-a)^(-2s) + (b-x)^(-2s)) / (2s).

This script shares no quadrature code with the package; it exists so the
frozen reference values in the test data can be audited and rebuilt.

Usage: python tools/make_stiffness_reference.py > tests/data/stiffness_1d_reference.json
"""

import json

import numpy as np
from scipy.integrate import quad


def hat(nodes, i):
    def f(x):
        if x <= nodes[i - 1] or x >= nodes[i + 1]:
            return 0.0
        if x <= nodes[i]:
            return (x - nodes[i - 1]) / (nodes[i] - nodes[i - 1])
        return (nodes[i + 1] - x) / (nodes[i + 1] - nodes[i])

    return f


def brute_entry(nodes, a, b, i, j, s):
    phii, phij = hat(nodes, i), hat(nodes, j)

    def kernel(r):
        return 0.0 if r == 0.0 else abs(r) ** (-1.0 - 2.0 * s)

    def inner(x):
        def f(y):
            if y == x:
                return 0.0
            return (phii(x) - phii(y)) * (phij(x) - phij(y)) * kernel(x - y)

        v, _ = quad(f, a, b, points=sorted(set(list(nodes) + [x])),
                    limit=400, epsabs=1e-13, epsrel=1e-11)
        return v

    outer, _ = quad(inner, a, b, points=list(nodes), limit=400,
                    epsabs=1e-12, epsrel=1e-10)

    def k(x):
        return ((x - a) ** (-2.0 * s) + (b - x) ** (-2.0 * s)) / (2.0 * s)

    ext, _ = quad(lambda x: 2.0 * phii(x) * phij(x) * k(x), a, b,
                  points=list(nodes), limit=400, epsabs=1e-13, epsrel=1e-11)
    return outer + ext


def main():
    out = {}
    for cells in (4, 8):
        nodes = np.linspace(0.0, 1.0, cells + 1)
        for s in (0.25, 0.5, 0.75):
            A = np.zeros((cells - 1, cells - 1))
            for i in range(1, cells):
                for j in range(i, cells):
                    val = brute_entry(nodes, 0.0, 1.0, i, j, s)
                    A[i - 1, j - 1] = val
                    A[j - 1, i - 1] = val
            out[f"cells={cells},s={s}"] = A.tolist()
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
