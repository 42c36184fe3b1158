"""Hot numerical kernels.

Three groups live here:

* evaluation of the metric profile g and its derivatives from a compact
  numeric encoding (trigonometric family or periodic cubic spline);
* an adaptive Dormand-Prince 8(5,3) integrator specialised to the radial
  ODE systems used by the shooting and spectral modules;
* tridiagonal solvers for the implicit evolution schemes.

Every function is compiled with numba when available. With numba disabled
the same source runs as Python; the tridiagonal solve then switches to
``scipy.linalg.solve_banded``.
"""
import math

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from ._accel import HAS_NUMBA, njit

# Profile kinds understood by ``profile_derivs``.
KIND_TRIG = 0
KIND_SPLINE = 1

# ODE systems understood by ``rhs``.
SYS_PROFILE_REG = 0
SYS_PROFILE = 1
SYS_COUPLED_REG = 2
SYS_COUPLED = 3

# Layout of the parameter vector passed to ``rhs``.
P_DIM, P_FRIC, P_K, P_GAMMA, P_S0, P_G0, P_DG0, P_E = range(8)
N_PARAMS = 8

# Integrator status codes.
OK = 0
TOO_SMALL_STEP = 1
TOO_MANY_STEPS = 2
LEFT_DOMAIN = 3
NOT_FINITE = 4

_NS = _dop.N_STAGES
_A = np.ascontiguousarray(_dop.A[:_NS, :_NS])
_B = np.ascontiguousarray(_dop.B)
_C = np.ascontiguousarray(_dop.C[:_NS])
_E3 = np.ascontiguousarray(_dop.E3)
_E5 = np.ascontiguousarray(_dop.E5)


@njit(cache=True, nogil=True)
def profile_derivs(s, kind, par, xb, cf, out):
    """Fill ``out`` with g, g', g'', g''', g'''' at ``s``.

    For ``KIND_TRIG`` the profile is ``par[0] sin s - par[1] sin 3s``, which
    covers the round sphere and ``sin s (1 + eps sin^2 s)``. For
    ``KIND_SPLINE`` ``xb`` holds breakpoints, ``cf`` the (4, n) power-basis
    coefficients and ``par[0]`` the period (0 for a non-periodic profile).
    """
    if kind == KIND_TRIG:
        al = par[0]
        be = par[1]
        s1 = math.sin(s)
        c1 = math.cos(s)
        s3 = math.sin(3.0 * s)
        c3 = math.cos(3.0 * s)
        out[0] = al * s1 - be * s3
        out[1] = al * c1 - 3.0 * be * c3
        out[2] = -al * s1 + 9.0 * be * s3
        out[3] = -al * c1 + 27.0 * be * c3
        out[4] = al * s1 - 81.0 * be * s3
        return
    x = s
    per = par[0]
    n = xb.shape[0] - 1
    if per > 0.0:
        x = xb[0] + (x - xb[0]) % per
    i = np.searchsorted(xb, x, side="right") - 1
    if i < 0:
        i = 0
    elif i > n - 1:
        i = n - 1
    t = x - xb[i]
    a3 = cf[0, i]
    a2 = cf[1, i]
    a1 = cf[2, i]
    a0 = cf[3, i]
    out[0] = ((a3 * t + a2) * t + a1) * t + a0
    out[1] = (3.0 * a3 * t + 2.0 * a2) * t + a1
    out[2] = 6.0 * a3 * t + 2.0 * a2
    out[3] = 6.0 * a3
    out[4] = 0.0


@njit(cache=True, nogil=True)
def G_derivs(s, kind, par, xb, cf, gd, out):
    """Fill ``out`` with G, G', G'', G''' where G = g g'."""
    profile_derivs(s, kind, par, xb, cf, gd)
    g0 = gd[0]
    g1 = gd[1]
    g2 = gd[2]
    g3 = gd[3]
    g4 = gd[4]
    out[0] = g0 * g1
    out[1] = g1 * g1 + g0 * g2
    out[2] = 3.0 * g1 * g2 + g0 * g3
    out[3] = 3.0 * g2 * g2 + 4.0 * g1 * g3 + g0 * g4


@njit(cache=True, nogil=True)
def rhs(system, r, y, P, kind, par, xb, cf, gd, Gd, dy):
    """Right-hand side of the radial systems.

    The profile equation is ``h'' + ((D-1)/r + c r) h' - k G(h)/r^2 = 0`` with
    friction ``c`` (1/2 for expanders, 0 for harmonic maps). Regular
    variables write ``h = s0 + r^gamma y`` and ``v = r^gamma u`` so that the
    state stays bounded at the origin. Coupled systems append the linearised
    eigenvalue equation ``-v'' - ((D-1)/r + c r) v' + k G'(h) v / r^2 = E v``.
    """
    D = P[P_DIM]
    c = P[P_FRIC]
    k = P[P_K]
    gam = P[P_GAMMA]
    s0 = P[P_S0]
    if system == SYS_PROFILE_REG or system == SYS_COUPLED_REG:
        m = 2.0 * gam + D - 1.0
        rg = r ** gam
        z = rg * y[0]
        G_derivs(s0 + z, kind, par, xb, cf, gd, Gd)
        nl = Gd[0] - P[P_G0] - P[P_DG0] * z
        dy[0] = y[1]
        dy[1] = -(m / r + c * r) * y[1] - c * gam * y[0] + k * nl / (rg * r * r)
        if system == SYS_COUPLED_REG:
            dy[2] = y[3]
            dy[3] = (-(m / r + c * r) * y[3] - (c * gam + P[P_E]) * y[2]
                     + k * (Gd[1] - P[P_DG0]) * y[2] / (r * r))
        return
    G_derivs(y[0], kind, par, xb, cf, gd, Gd)
    drift = (D - 1.0) / r + c * r
    dy[0] = y[1]
    dy[1] = -drift * y[1] + k * Gd[0] / (r * r)
    if system == SYS_COUPLED:
        dy[2] = y[3]
        dy[3] = -drift * y[3] + (k * Gd[1] / (r * r) - P[P_E]) * y[2]


@njit(cache=True, nogil=True)
def _step_cap(system, r, y, P, Gd, hmax, frac):
    cap = min(hmax, frac * r)
    if system == SYS_COUPLED or system == SYS_COUPLED_REG:
        # keep at least ten steps per local oscillation wavelength
        q = P[P_K] * Gd[1] / (r * r)
        lam = max(P[P_E] - q, 1.0)
        cap = min(cap, 0.2 * math.pi / math.sqrt(lam))
    return cap


@njit(cache=True, nogil=True)
def integrate_dop853(system, r0, r1, y0, P, kind, par, xb, cf,
                     rtol, atol, hmax, frac, lo, hi, max_steps):
    """Adaptive DOP853 integration of ``system`` from ``r0`` to ``r1``.

    Returns ``(status, n, rs, ys, dys)`` where the first ``n`` rows hold every
    accepted step (including the initial point). The first state component
    is checked against ``[lo, hi]`` after every step (``LEFT_DOMAIN``).
    """
    nv = y0.shape[0]
    reg = system == SYS_PROFILE_REG or system == SYS_COUPLED_REG
    rs = np.empty(max_steps + 1)
    ys = np.empty((max_steps + 1, nv))
    dys = np.empty((max_steps + 1, nv))
    K = np.empty((_NS + 1, nv))
    gd = np.empty(5)
    Gd = np.empty(4)
    y = y0.copy()
    f = np.empty(nv)
    rhs(system, r0, y, P, kind, par, xb, cf, gd, Gd, f)
    r = r0
    rs[0] = r
    ys[0] = y
    dys[0] = f
    n = 1
    h_abs = 0.05 * _step_cap(system, r, y, P, Gd, hmax, frac)
    ynew = np.empty(nv)
    ytmp = np.empty(nv)
    fnew = np.empty(nv)
    err5 = np.empty(nv)
    err3 = np.empty(nv)
    status = OK
    while r < r1:
        if n > max_steps:
            status = TOO_MANY_STEPS
            break
        min_step = 10.0 * abs(np.nextafter(r, np.inf) - r)
        cap = _step_cap(system, r, y, P, Gd, hmax, frac)
        if h_abs > cap:
            h_abs = cap
        rejected = False
        while True:
            if h_abs < min_step:
                status = TOO_SMALL_STEP
                break
            rn = r + h_abs
            if rn > r1:
                rn = r1
            h = rn - r
            for j in range(nv):
                K[0, j] = f[j]
            for s in range(1, _NS):
                for j in range(nv):
                    acc = 0.0
                    for q in range(s):
                        acc += K[q, j] * _A[s, q]
                    ytmp[j] = y[j] + h * acc
                rhs(system, r + _C[s] * h, ytmp, P, kind, par, xb, cf, gd, Gd, fnew)
                for j in range(nv):
                    K[s, j] = fnew[j]
            for j in range(nv):
                acc = 0.0
                for q in range(_NS):
                    acc += K[q, j] * _B[q]
                ynew[j] = y[j] + h * acc
            rhs(system, rn, ynew, P, kind, par, xb, cf, gd, Gd, fnew)
            for j in range(nv):
                K[_NS, j] = fnew[j]
            finite = True
            for j in range(nv):
                if not math.isfinite(ynew[j]):
                    finite = False
            if not finite:
                h_abs *= 0.2
                rejected = True
                continue
            e5 = 0.0
            e3 = 0.0
            for j in range(nv):
                mag = max(abs(y[j]), abs(ynew[j]))
                if reg and j % 2 == 1:
                    # y' is measured against y / r, the scale of its round-off noise
                    mag = max(mag, abs(y[j - 1]) / r)
                sc = atol + mag * rtol
                a5 = 0.0
                a3 = 0.0
                for q in range(_NS + 1):
                    a5 += K[q, j] * _E5[q]
                    a3 += K[q, j] * _E3[q]
                err5[j] = a5 / sc
                err3[j] = a3 / sc
                e5 += err5[j] * err5[j]
                e3 += err3[j] * err3[j]
            if e5 == 0.0 and e3 == 0.0:
                en = 0.0
            else:
                en = abs(h) * e5 / math.sqrt((e5 + 0.01 * e3) * nv)
            if en < 1.0:
                if en == 0.0:
                    fac = 10.0
                else:
                    fac = min(10.0, 0.9 * en ** (-1.0 / 8.0))
                if rejected:
                    fac = min(1.0, fac)
                h_abs *= fac
                break
            h_abs *= max(0.2, 0.9 * en ** (-1.0 / 8.0))
            rejected = True
        if status != OK:
            break
        r = rn
        for j in range(nv):
            y[j] = ynew[j]
            f[j] = fnew[j]
        rs[n] = r
        ys[n] = y
        dys[n] = f
        n += 1
        if system == SYS_PROFILE or system == SYS_COUPLED:
            if y[0] < lo or y[0] > hi:
                status = LEFT_DOMAIN
                break
    return status, n, rs[:n].copy(), ys[:n].copy(), dys[:n].copy()


@njit(cache=True, nogil=True)
def _thomas(lower, diag, upper, rhs_):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    beta = diag[0]
    cp[0] = upper[0] / beta
    dp[0] = rhs_[0] / beta
    for i in range(1, n):
        beta = diag[i] - lower[i] * cp[i - 1]
        if i < n - 1:
            cp[i] = upper[i] / beta
        dp[i] = (rhs_[i] - lower[i] * dp[i - 1]) / beta
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def solve_tridiagonal(lower, diag, upper, b):
    """Solve a tridiagonal system.

    ``lower[i]`` multiplies ``x[i-1]`` and ``upper[i]`` multiplies ``x[i+1]``
    in row ``i``; ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    if HAS_NUMBA:
        return _thomas(lower, diag, upper, b)
    from scipy.linalg import solve_banded

    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, b)


@njit(cache=True, nogil=True)
def ldl_pivots(diag, off):
    """Pivots of the LDL^T factorisation of a symmetric tridiagonal matrix.

    All pivots positive means the matrix is positive definite.
    """
    n = diag.shape[0]
    piv = np.empty(n)
    piv[0] = diag[0]
    for i in range(1, n):
        piv[i] = diag[i] - off[i - 1] * off[i - 1] / piv[i - 1]
    return piv
