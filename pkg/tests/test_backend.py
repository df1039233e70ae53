"""The compiled and plain-numpy execution paths must agree.

The kernels run identical arithmetic under both backends, so matrices
should match to the last few ulps.  Each backend runs in a subprocess
because the choice is frozen at import time.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

SCRIPT = """
import json, sys
import numpy as np
from fraclap import Kernel, assemble_stiffness, assemble_mass
from fraclap.kernel import FRACTIONAL, TABULATED
from fraclap.mesh import build_interval_mesh, build_rectangle_mesh

kind = sys.argv[1]
if kind == "interval":
    mesh = build_interval_mesh(0.0, 1.0, 16)
else:
    mesh = build_rectangle_mesh((0.0, 1.0), (0.0, 1.0), 3, 3)
if sys.argv[2] == "fractional":
    kernel = Kernel(n=mesh.n, s=0.5, variant=FRACTIONAL)
else:
    r = np.logspace(-8, 4, 400)
    kernel = Kernel(n=mesh.n, s=0.5, variant=TABULATED,
                    table_r=r, table_v=r ** (-mesh.n - 1.0))
A = assemble_stiffness(mesh, kernel, quadrature_order=4).A
M = assemble_mass(mesh)
json.dump({"A": A.tolist(), "M": M.tolist()}, sys.stdout)
"""


def run_backend(no_numba, kind, variant):
    env = dict(os.environ)
    env["FRACLAP_NO_NUMBA"] = "1" if no_numba else ""
    proc = subprocess.run(
        [sys.executable, "-c", SCRIPT, kind, variant],
        capture_output=True, text=True, env=env, timeout=600,
    )
    assert proc.returncode == 0, proc.stderr
    out = json.loads(proc.stdout)
    return np.array(out["A"]), np.array(out["M"])


@pytest.mark.parametrize("kind,variant", [
    ("interval", "fractional"),
    ("interval", "tabulated"),
    ("rectangle", "fractional"),
])
def test_backends_agree(kind, variant):
    A_fast, M_fast = run_backend(False, kind, variant)
    A_ref, M_ref = run_backend(True, kind, variant)
    assert np.array_equal(M_fast, M_ref)
    scale = np.max(np.abs(A_ref))
    # the backends differ only in accumulation order (numpy uses pairwise
    # summation, the compiled loops sum sequentially), so agreement is a
    # few orders above machine epsilon but far below quadrature error
    assert np.max(np.abs(A_fast - A_ref)) <= 1e-10 * scale


def test_fallback_flag_is_honoured():
    code = (
        "import os; os.environ['FRACLAP_NO_NUMBA'] = '1'; "
        "from fraclap import _backend; "
        "assert not _backend.numba_enabled(); "
        "f = _backend.maybe_njit(lambda x: x + 1); "
        "assert f(1) == 2"
    )
    proc = subprocess.run([sys.executable, "-c", code],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
