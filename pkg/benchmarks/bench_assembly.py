"""Assembly throughput: compiled backend vs pure-NumPy fallback.

Runs the stiffness assembly for a few mesh sizes under each backend in a
fresh subprocess (the backend choice is frozen at import time) and prints
a timing table.  The first compiled run includes numba's cache warmup.

Usage: python benchmarks/bench_assembly.py [--cells 64 256 1024]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = """
import json, sys, time
from fraclap import Kernel, assemble_stiffness
from fraclap.kernel import FRACTIONAL
from fraclap.mesh import build_interval_mesh

results = []
for cells in json.loads(sys.argv[1]):
    mesh = build_interval_mesh(0.0, 1.0, cells)
    kernel = Kernel(n=1, s=0.5, variant=FRACTIONAL)
    t0 = time.perf_counter()
    assemble_stiffness(mesh, kernel, quadrature_order=6)
    results.append((cells, time.perf_counter() - t0))
json.dump(results, sys.stdout)
"""


def run(cells, no_numba):
    env = dict(os.environ)
    env["FRACLAP_NO_NUMBA"] = "1" if no_numba else ""
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps(cells)],
        capture_output=True, text=True, env=env,
    )
    if proc.returncode != 0:
        raise RuntimeError(proc.stderr)
    return dict((c, t) for c, t in json.loads(proc.stdout))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cells", type=int, nargs="+", default=[64, 256, 1024])
    args = parser.parse_args()

    fast = run(args.cells, no_numba=False)
    slow = run(args.cells, no_numba=True)

    print(f"{'cells':>8} {'numba [s]':>12} {'numpy [s]':>12} {'speedup':>9}")
    for c in args.cells:
        print(f"{c:>8} {fast[c]:>12.4f} {slow[c]:>12.4f} {slow[c] / fast[c]:>8.1f}x")


if __name__ == "__main__":
    main()
