"""The numba kernels and the pure NumPy fallback agree."""
import json
import os
import subprocess
import sys

import numpy as np

from hmflow import _accel

SCRIPT = r"""
import json
import numpy as np
from hmflow import _accel
from hmflow.geometry import TargetSurfaceProfile
from hmflow.kernels import solve_tridiagonal
from hmflow.shooting import ShootSpec, integrate

S = TargetSurfaceProfile.sphere()
rng = np.random.default_rng(1)
n = 500
lo, up = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
di = 2.5 + rng.uniform(0, 1, n)
b = rng.normal(size=n)
out = {
    "numba": _accel.HAS_NUMBA,
    "limits": [integrate(ShootSpec(S, d, d - 1, 0.0, a)).limit
               for d, a in ((3, 0.5), (3, 50.0), (7, 2.0))],
    "tri": solve_tridiagonal(lo, di, up, b).tolist(),
}
print(json.dumps(out))
"""


def _run(disable: bool) -> dict:
    env = dict(os.environ)
    env.pop("HMFLOW_DISABLE_NUMBA", None)
    if disable:
        env["HMFLOW_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                          text=True, check=True, timeout=900)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def test_fallback_matches_numba():
    slow = _run(True)
    assert slow["numba"] is False
    fast = _run(False)
    assert fast["numba"] is _accel.HAS_NUMBA
    assert np.allclose(fast["limits"], slow["limits"], rtol=0, atol=1e-10)
    assert np.allclose(fast["tri"], slow["tri"], rtol=1e-13, atol=1e-13)


def test_tridiagonal_solution():
    from hmflow.kernels import solve_tridiagonal

    rng = np.random.default_rng(0)
    n = 50
    lo, up = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    di = 2.5 + rng.uniform(0, 1, n)
    b = rng.normal(size=n)
    A = np.diag(di) + np.diag(lo[1:], -1) + np.diag(up[:-1], 1)
    assert np.allclose(solve_tridiagonal(lo, di, up, b), np.linalg.solve(A, b), atol=1e-12)
