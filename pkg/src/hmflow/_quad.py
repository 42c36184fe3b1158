"""Small quadrature and interpolation helpers shared across modules."""
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

# Quintic Hermite basis in power form: value(t) = sum_j coef[j] t^j where
# coef = _H5 @ [p0, m0, c0, p1, m1, c1] with m = h' dx and c = h'' dx^2.
_H5 = np.array([
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 0.5, 0, 0, 0],
    [-10, -6, -1.5, 10, -4, 0.5],
    [15, 8, 1.5, -15, 7, -1.0],
    [-6, -3, -0.5, 6, -3, 0.5],
])


def hermite5(x, xs, y, dy, ddy, nu: int = 0):
    """Evaluate the quintic Hermite interpolant (or derivative ``nu`` <= 2).

    ``xs`` must be increasing; values outside are clamped to the end
    intervals and extrapolated polynomially.
    """
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    dx = xs[i + 1] - xs[i]
    t = (x - xs[i]) / dx
    data = np.stack([y[i], dy[i] * dx, ddy[i] * dx * dx,
                     y[i + 1], dy[i + 1] * dx, ddy[i + 1] * dx * dx])
    coef = np.tensordot(_H5, data, axes=(1, 0))
    if nu == 0:
        powers = np.stack([t ** j for j in range(6)])
        return np.sum(coef * powers, axis=0)
    if nu == 1:
        powers = np.stack([j * t ** (j - 1) if j else np.zeros_like(t) for j in range(6)])
        return np.sum(coef * powers, axis=0) / dx
    if nu == 2:
        powers = np.stack([j * (j - 1) * t ** (j - 2) if j > 1 else np.zeros_like(t)
                           for j in range(6)])
        return np.sum(coef * powers, axis=0) / (dx * dx)
    raise ValueError("nu must be 0, 1 or 2")


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_laguerre(n: int):
    return np.polynomial.laguerre.laggauss(n)


def decade_ratio(r, integrand) -> float:
    """Ratio of the integral over the innermost decade to the next one.

    For an integrand behaving like ``r^-p`` near 0 the ratio is ``10^(p-1)``,
    so values near or above one signal a non-integrable singularity. Returns
    0 when the grid does not reach two decades below its smallest radius.
    """
    r = np.asarray(r, dtype=float)
    f = np.abs(np.asarray(integrand, dtype=float))
    pos = r > 0
    r, f = r[pos], f[pos]
    if r.size < 8:
        return 0.0
    a = r[0]
    if r[-1] < 100 * a:
        return 0.0

    def part(lo, hi):
        m = (r >= lo) & (r <= hi)
        if np.count_nonzero(m) < 3:
            return np.nan
        return trapezoid(f[m], r[m])

    inner = part(a, 10 * a)
    outer = part(10 * a, 100 * a)
    if not np.isfinite(inner) or not np.isfinite(outer):
        return 0.0
    if outer == 0.0:
        return 0.0 if inner == 0.0 else np.inf
    return float(inner / outer)
