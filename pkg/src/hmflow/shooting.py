"""Shooting for the singular radial profile equation.

A profile h solves

    h'' + ((D - 1)/r + c r) h' - k G(h) / r^2 = 0,        G = g g',

with ``c = 1/2`` for self-similar expanders and ``c = 0`` for harmonic maps.
Regular solutions leave a critical level ``s0`` of g² as
``h = s0 + a r^gamma + ...``; the shooting parameter is ``a``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import kernels
from ._quad import decade_ratio, gauss_laguerre, gauss_legendre, hermite5
from .errors import BlowUp, NonMinimalBase, SeriesDivergence, StepFailure, Unbounded
from .geometry import TargetSurfaceProfile

SEED_REL = 1e-6
SEED_GUARD = 0.1
MAX_STEPS = 200_000
R_CAP = 400.0


class Equation(str, Enum):
    EXPANDER = "expander"
    HARMONIC = "harmonic"
    GENERAL = "general"


@dataclass(frozen=True, eq=False)
class ShootSpec:
    """Everything needed to integrate one profile.

    Parameters
    ----------
    profile : TargetSurfaceProfile
    d : int
        Domain dimension.
    k : float
        Eigenmap eigenvalue.
    s0 : float
        Base level (pole or minimal sphere) the profile leaves from.
    a : float
        Shooting parameter, coefficient of ``r^gamma``.
    equation : Equation
        Expander, harmonic map, or the harmonic-type equation in a general
        real dimension ``D``.
    r_max : float
        Initial outer radius; expanders extend it until the tail bound
        drops below ``limit_tol``.
    r0 : float or None
        Switch radius for the series seed, chosen automatically when None.
    friction : float or None
        Override of the drift coefficient ``c``.
    """

    profile: TargetSurfaceProfile
    d: int
    k: float
    s0: float
    a: float
    equation: Equation = Equation.EXPANDER
    D: float | None = None
    r_max: float = 20.0
    rtol: float = 1e-12
    atol: float = 1e-18
    r0: float | None = None
    r_switch: float = 1.0
    limit_tol: float = 1e-9
    friction: float | None = None
    max_step: float = 0.25
    step_frac: float = 0.1

    def __post_init__(self):
        if not self.r_max > 0 or not self.rtol > 0 or not self.atol > 0:
            raise ValueError("r_max and tolerances must be positive")
        if self.r0 is not None and not (0 < self.r0 < self.r_max):
            raise ValueError("need 0 < r0 < r_max")
        if self.equation != Equation.GENERAL and self.D is not None and self.D != self.d:
            raise ValueError("D differs from d only for the general-dimension equation")
        object.__setattr__(self, "equation", Equation(self.equation))

    @property
    def dim(self) -> float:
        return float(self.D if self.D is not None else self.d)

    @property
    def fric(self) -> float:
        if self.friction is not None:
            return float(self.friction)
        return 0.5 if self.equation == Equation.EXPANDER else 0.0

    def with_(self, **kw) -> "ShootSpec":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {
            "manifold": self.profile.describe(), "d": self.d, "k": self.k, "s0": self.s0,
            "a": self.a, "equation": self.equation.value, "D": self.D, "r_max": self.r_max,
            "rtol": self.rtol, "atol": self.atol, "r0": self.r0, "r_switch": self.r_switch,
            "limit_tol": self.limit_tol, "friction": self.friction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShootSpec":
        data = dict(data)
        profile = TargetSurfaceProfile.from_config(data.pop("manifold"))
        return cls(profile=profile, **data)


def local_exponent(d: float, k: float, dG0: float) -> float:
    """Positive root of ``gamma^2 + (d-2) gamma - k G'(s0) = 0``.

    Raises
    ------
    NonMinimalBase
        If ``G'(s0) <= 0``.
    """
    if not dG0 > 0:
        raise NonMinimalBase(f"G'(s0) = {dG0:.6g} is not positive")
    return 0.5 * (math.sqrt((d - 2.0) ** 2 + 4.0 * k * dG0) - (d - 2.0))


@dataclass(frozen=True)
class Seed:
    """Series data at the switch radius, in both raw and regular variables."""

    r0: float
    h: float
    dh: float
    y: float
    dy: float
    gamma: float
    correction: float


def _seed_coefficients(spec: ShootSpec, Gd0):
    """Coefficients of ``y = a (1 + c2 r^2) + e2 r^gamma + e3 r^(2 gamma)``."""
    D, c, k, a = spec.dim, spec.fric, float(spec.k), float(spec.a)
    gam = local_exponent(D, k, Gd0[1])
    m = 2.0 * gam + D - 1.0
    c2 = -c * gam / (2.0 * (m + 1.0))
    e2 = k * Gd0[2] * a * a / (2.0 * gam * (gam + m - 1.0))
    e3 = k * (Gd0[3] * a ** 3 / 6.0 + Gd0[2] * a * e2) / (2.0 * gam * (2.0 * gam + m - 1.0))
    return gam, c2, e2, e3


def _relative_correction(r, gam, c2, e2, e3, a):
    return abs(c2) * r * r + (abs(e2) * r ** gam + abs(e3) * r ** (2 * gam)) / abs(a)


def series_seed(spec: ShootSpec) -> Seed:
    """Truncated expansion of the regular solution at the switch radius.

    Raises
    ------
    SeriesDivergence
        If the relative size of the corrections exceeds 0.1 at a prescribed
        ``r0``.
    """
    Gd0 = spec.profile.G_derivs(spec.s0)
    gam = local_exponent(spec.dim, float(spec.k), float(Gd0[1]))
    a = float(spec.a)
    if a == 0.0:
        r0 = spec.r0 if spec.r0 is not None else 1e-3
        return Seed(r0, float(spec.s0), 0.0, 0.0, 0.0, gam, 0.0)
    gam, c2, e2, e3 = _seed_coefficients(spec, Gd0)
    if spec.r0 is not None:
        r0 = float(spec.r0)
        corr = _relative_correction(r0, gam, c2, e2, e3, a)
        if corr > SEED_GUARD:
            raise SeriesDivergence(f"series correction {corr:.3g} at r0 = {r0:.3g}")
    else:
        cands = [1e-2, 1e-3 * abs(a) ** (-1.0 / gam)]
        if c2:
            cands.append(math.sqrt(SEED_REL / abs(c2)))
        if e2:
            cands.append((SEED_REL * abs(a) / abs(e2)) ** (1.0 / gam))
        if e3:
            cands.append((SEED_REL * abs(a) / abs(e3)) ** (1.0 / (2 * gam)))
        r0 = min(cands)
        corr = _relative_correction(r0, gam, c2, e2, e3, a)
    y = a * (1.0 + c2 * r0 * r0) + e2 * r0 ** gam + e3 * r0 ** (2 * gam)
    dy = 2.0 * a * c2 * r0 + gam * e2 * r0 ** (gam - 1) + 2 * gam * e3 * r0 ** (2 * gam - 1)
    rg = r0 ** gam
    h = spec.s0 + rg * y
    dh = gam * r0 ** (gam - 1) * y + rg * dy
    return Seed(r0, float(h), float(dh), float(y), float(dy), gam, float(corr))


@lru_cache(maxsize=256)
def derivative_bound_constant(D: float, k: float, sup_g: float, sup_G: float) -> float:
    """Admissible constant C with ``|h'(r)| r^3 <= C`` for ``r >= 1``.

    Uses ``F = r^2 h'^2``, ``F' + r F <= 2 k G h'`` and the inequality
    ``2 k G h' <= (r/2) F + 2 k^2 G^2 / r^3`` to get
    ``F(r) <= exp(-(r^2-1)/4) F(1) + C0 phi(r)`` with
    ``phi(r) = int_1^r exp((s^2 - r^2)/4) s^-3 ds``, ``C0 = 2 k^2 |G|^2`` and
    ``F(1) <= k |g|^2`` for regular seeds. The bound is maximised over r.
    """
    F1 = k * sup_g ** 2
    C0 = 2.0 * k * k * sup_G ** 2
    rs = np.geomspace(1.0, 400.0, 1500)
    best = math.sqrt(2.0 * C0)
    for r in rs:
        phi = quad(lambda s: math.exp((s * s - r * r) / 4.0) / s ** 3, max(1.0, r - 60.0 / r), r,
                   epsabs=0, epsrel=1e-10, limit=200)[0] if r > 1.0 else 0.0
        val = r * r * math.sqrt(math.exp(-(r * r - 1.0) / 4.0) * F1 + C0 * phi)
        best = max(best, val)
    return float(best) * (1.0 + 1e-6)


def _laguerre_sums(D: float, R: float):
    u, w = gauss_laguerre(80)
    x = 4.0 * u / (R * R)
    J1 = float(np.sum(w * (1.0 + x) ** (-D / 2.0)))
    if abs(D - 2.0) < 1e-12:
        kap = float(np.sum(w * np.log1p(x) / (4.0 * u)))
    else:
        kap = float(np.sum(w * (1.0 - (1.0 + x) ** (1.0 - D / 2.0)) / (4.0 * u * (D / 2.0 - 1.0))))
    return J1, kap


@dataclass(frozen=True)
class TailEstimate:
    """Limit at infinity of an expander profile.

    ``limit`` is ``h(R)`` plus the first-order tail correction; ``bound``
    bounds ``|limit - lim h|`` by the remainder estimate plus an integration
    error allowance; ``certified`` is the cruder ``C / (2 R^2)``.
    """

    limit: float
    bound: float
    certified: float
    R: float
    raw: float


def tail_estimate(spec: ShootSpec, R: float, hR: float, dhR: float, cbar: float) -> TailEstimate:
    """Limit and error bound from the state ``(h, h')`` at radius ``R``.

    Writing ``w = r^(D-1) exp(r^2/4) h'`` gives ``w' = k r^(D-3) exp(r^2/4) G(h)``,
    hence ``lim h - h(R) = w(R) P(R) + k int_R^oo K(s) G(h(s)) ds`` with
    ``P(R) = int_R^oo r^(1-D) exp(-r^2/4) dr`` and ``K = -kappa'``. Expanding
    ``G(h(s))`` to first order about ``h(R)`` gives the estimate

        w P + k G kappa + k^2 G G' kappa^2 / 2,

    and every neglected piece is bounded explicitly in terms of
    ``delta >= sup |h(s) - h(R)|``; all of them are ``O(R^-6)``.
    """
    D, k = spec.dim, float(spec.k)
    prof = spec.profile
    J1, kap = _laguerre_sums(D, R)
    GR = float(prof.G(hR))
    dGR = float(prof.dG(hR))
    lam = prof.sup_dG
    wP = 2.0 * dhR * J1 / R
    tau = wP + k * GR * kap + 0.5 * k * k * GR * dGR * kap * kap
    q = k * lam * kap
    cR = 1.0 - 2.0 * abs(D - 4.0) / (R * R)
    integ = 100.0 * (spec.atol + spec.rtol * abs(hR)) + 8.0 * np.finfo(float).eps * abs(hR)
    if q < 1.0 and cR > 0.0:
        delta = (abs(wP) + k * abs(GR) * kap) / (1.0 - q)
        bound = (0.5 * k * prof.sup_d2G * kap * delta ** 2
                 + k * abs(dGR) * kap * abs(wP)
                 + k * k * abs(dGR * GR) * (4.0 / 3.0) / (R ** 6 * cR)
                 + k * k * abs(dGR) * lam * delta * kap * kap
                 + integ)
    else:
        bound = math.inf
    certified = cbar / (2.0 * R * R)
    return TailEstimate(hR + tau, bound, certified, R, hR)


class Trajectory:
    """Integrated profile on the grid of accepted integrator steps.

    Attributes
    ----------
    r, h, dh, ddh : ndarray
        Radii and the solution with its first two derivatives.
    gamma : float
        Exponent of the series seed.
    limit, bound, certified_bound : float or None
        Tail limit, its error bound and the crude certified bound (expanders).
    cbar : float or None
        Constant bounding ``r^3 |h'|`` for ``r >= 1`` (expanders).
    bounded : bool
        Whether ``|h - s0|`` stayed within one period of the target.
    """

    def __init__(self, spec: ShootSpec, r, h, dh, ddh, gamma, r0, tail=None, cbar=None):
        self.spec = spec
        self.r = np.asarray(r, dtype=float)
        self.h = np.asarray(h, dtype=float)
        self.dh = np.asarray(dh, dtype=float)
        self.ddh = np.asarray(ddh, dtype=float)
        self.gamma = float(gamma)
        self.r0 = float(r0)
        self.tail = tail
        self.cbar = cbar
        per = spec.profile.period
        span = float(np.max(np.abs(self.h - spec.s0))) if self.h.size else 0.0
        self.bounded = bool(np.all(np.isfinite(self.h)) and (per is None or span <= per))
        m = self.r <= 1.0
        sg = np.sign(spec.a)
        self.monotone_initial = bool(sg == 0 or np.all(sg * self.dh[m] >= 0))

    # -- convenience ----------------------------------------------------
    @property
    def a(self) -> float:
        return float(self.spec.a)

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @property
    def limit(self) -> float | None:
        return None if self.tail is None else self.tail.limit

    @property
    def bound(self) -> float | None:
        return None if self.tail is None else self.tail.bound

    @property
    def certified_bound(self) -> float | None:
        return None if self.tail is None else self.tail.certified

    @property
    def is_constant(self) -> bool:
        return self.spec.a == 0.0

    def __call__(self, x, nu: int = 0):
        """Evaluate h (``nu = 0``) or a derivative at arbitrary radii.

        Below the first grid radius the series behaviour ``s0 + y r^gamma``
        is used; beyond the last one the tail limit (if known) is approached
        through the first-order asymptotics ``L - k G(L) / r^2``.
        """
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.full_like(x, self.spec.s0 if nu == 0 else 0.0)
        out = hermite5(np.clip(x, self.r[0], self.r[-1]), self.r, self.h, self.dh, self.ddh, nu)
        lo = x < self.r[0]
        if np.any(lo):
            y0 = (self.h[0] - self.spec.s0) / self.r[0] ** self.gamma
            g = self.gamma
            xl = x[lo]
            if nu == 0:
                out[lo] = self.spec.s0 + y0 * xl ** g
            elif nu == 1:
                out[lo] = g * y0 * xl ** (g - 1)
            else:
                out[lo] = g * (g - 1) * y0 * xl ** (g - 2) if g != 1 else 0.0
        hi = x > self.r[-1]
        if np.any(hi):
            R = self.r[-1]
            if self.tail is not None:
                L = self.tail.limit
                beta = (self.h[-1] - L) * R * R
                xh = x[hi]
                out[hi] = [L + beta / xh ** 2, -2 * beta / xh ** 3, 6 * beta / xh ** 4][nu]
            else:
                out[hi] = [self.h[-1], 0.0, 0.0][nu]
        return out

    def G(self):
        return self.spec.profile.G(self.h)

    def V(self) -> np.ndarray:
        g = self.spec.profile.g(self.h)
        return self.r ** 2 * self.dh ** 2 - self.spec.k * g ** 2

    def Vtilde(self) -> np.ndarray:
        g = self.spec.profile.g(self.h)
        D = self.spec.dim
        return self.r ** (2 * (D - 1)) * (self.dh ** 2 - self.spec.k * g ** 2 / self.r ** 2)

    def F(self) -> np.ndarray:
        return self.r ** 2 * self.dh ** 2

    def div_form_residual(self, n_gauss: int = 8) -> np.ndarray:
        """Relative residual of the integrated divergence form on each step.

        On ``[r_i, r_{i+1}]`` compares ``w(r_{i+1}) - w(r_i)`` with
        ``k int r^(D-3) exp(c r^2/2) G(h) dr`` evaluated by Gauss-Legendre on
        the dense interpolant, where ``w = r^(D-1) exp(c r^2/2) h'``; both are
        scaled by ``exp(-c r_{i+1}^2/2)`` and normalised by the sum of the
        magnitudes involved, including the round-off floor of G(h).
        """
        if self.is_constant or self.r.size < 2:
            return np.zeros(max(self.r.size - 1, 0))
        D, c, k = self.spec.dim, self.spec.fric, float(self.spec.k)
        r, dh = self.r, self.dh
        a, b = r[:-1], r[1:]
        xg, wg = gauss_legendre(n_gauss)
        s = a[:, None] + (b - a)[:, None] * xg[None, :]
        hs = self(s.ravel()).reshape(s.shape)
        Gs = self.spec.profile.G(hs)
        ref = 0.5 * c * b * b
        wgt = s ** (D - 3) * np.exp(0.5 * c * s * s - ref[:, None])
        integ = k * np.sum(wg[None, :] * wgt * Gs, axis=1) * (b - a)
        # round-off floor of evaluating G near one of its zeros
        floor = 4.0 * np.finfo(float).eps * (1.0 + np.abs(hs)) * self.spec.profile.sup_dG
        absint = k * np.sum(wg[None, :] * wgt * (np.abs(Gs) + floor), axis=1) * (b - a)
        wa = a ** (D - 1) * np.exp(0.5 * c * a * a - ref) * dh[:-1]
        wb = b ** (D - 1) * dh[1:]
        num = np.abs(wb - wa - integ)
        den = np.abs(wb) + np.abs(wa) + absint + 1e-300
        return num / den

    def crossings(self, level: float) -> np.ndarray:
        """Radii where ``h - level`` changes sign (linear interpolation of the root)."""
        f = self.h - level
        idx = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
        return self.r[idx] - f[idx] * (self.r[idx + 1] - self.r[idx]) / (f[idx + 1] - f[idx])

    def extrema_count(self) -> int:
        """Number of interior sign changes of h'."""
        s = np.sign(self.dh[1:])
        s = s[s != 0]
        return int(np.count_nonzero(s[:-1] * s[1:] < 0))

    def to_csv(self, path) -> None:
        """Write ``r,h,dh,V,Vtilde`` and echo the shooting parameters as JSON next to it."""
        V, Vt = self.V(), self.Vtilde()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "h", "dh", "V", "Vtilde"])
            for row in zip(self.r, self.h, self.dh, V, Vt):
                w.writerow([repr(float(v)) for v in row])
        meta = self.spec.as_dict()
        meta.update({"gamma": self.gamma, "limit": self.limit, "bound": self.bound,
                     "certified_bound": self.certified_bound, "cbar": self.cbar})
        with open(str(path).rsplit(".", 1)[0] + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _run_kernel(system, r_start, r_end, y0, spec: ShootSpec, P):
    lo, hi = spec.profile.h_bounds
    status, n, rs, ys, dys = kernels.integrate_dop853(
        system, float(r_start), float(r_end), np.asarray(y0, dtype=float), P,
        *spec.profile.kernel_args(), spec.rtol, spec.atol, spec.max_step, spec.step_frac,
        lo, hi, MAX_STEPS)
    if status == kernels.LEFT_DOMAIN:
        raise BlowUp(f"h left the coordinate domain [{lo}, {hi}] near r = {rs[-1]:.6g}")
    if status != kernels.OK:
        raise StepFailure(f"integrator status {status} near r = {rs[-1]:.6g}")
    return rs, ys, dys


def param_vector(spec: ShootSpec, gamma: float, E: float = 0.0) -> np.ndarray:
    Gd0 = spec.profile.G_derivs(spec.s0)
    P = np.zeros(kernels.N_PARAMS)
    P[kernels.P_DIM] = spec.dim
    P[kernels.P_FRIC] = spec.fric
    P[kernels.P_K] = float(spec.k)
    P[kernels.P_GAMMA] = gamma
    P[kernels.P_S0] = spec.s0
    P[kernels.P_G0] = Gd0[0]
    P[kernels.P_DG0] = Gd0[1]
    P[kernels.P_E] = E
    return P


def cbar_for(spec: ShootSpec) -> float:
    return derivative_bound_constant(spec.dim, float(spec.k), spec.profile.sup_g, spec.profile.sup_G)


def _last_extremum(r, dh) -> float:
    s = np.sign(dh)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    return float(r[idx[-1] + 1]) if idx.size else 0.0


def switch_radius(spec: ShootSpec, seed: Seed) -> float:
    """Radius where integration leaves the regular variables.

    Once the nonlinearity is felt, ``h' = gamma r^(gamma-1) y + r^gamma y'``
    suffers cancellation, so the switch happens no later than
    ``|a| r^gamma = 0.1``.
    """
    if spec.a == 0.0:
        return min(spec.r_switch, spec.r_max)
    return min(spec.r_switch, spec.r_max,
               max(10.0 * seed.r0, (0.1 / abs(spec.a)) ** (1.0 / seed.gamma)))


def integrate(spec: ShootSpec) -> Trajectory:
    """Integrate the regular solution with parameter ``spec.a``.

    The seed is propagated in the regular variable ``y = (h - s0)/r^gamma``
    up to ``r_switch`` and in ``(h, h')`` beyond. For expanders the outer
    radius grows until the tail bound is below ``limit_tol`` and exceeds
    twice the last extremum of h.

    Raises
    ------
    StepFailure, BlowUp
    """
    seed = series_seed(spec)
    expander = spec.equation == Equation.EXPANDER
    cbar = cbar_for(spec) if expander else None
    if spec.a == 0.0:
        r = np.array([seed.r0, spec.r_max])
        z = np.zeros(2)
        tail = TailEstimate(spec.s0, 0.0, 0.0, spec.r_max, spec.s0) if expander else None
        return Trajectory(spec, r, np.full(2, spec.s0), z, z, seed.gamma, seed.r0, tail, cbar)
    P = param_vector(spec, seed.gamma)
    gam = seed.gamma
    r_sw = switch_radius(spec, seed)
    parts_r, parts_h, parts_dh, parts_ddh = [], [], [], []
    if r_sw > seed.r0:
        rs, ys, dys = _run_kernel(kernels.SYS_PROFILE_REG, seed.r0, r_sw, [seed.y, seed.dy], spec, P)
        rg = rs ** gam
        h = spec.s0 + rg * ys[:, 0]
        dh = gam * rs ** (gam - 1) * ys[:, 0] + rg * ys[:, 1]
        ddh = (gam * (gam - 1) * rs ** (gam - 2) * ys[:, 0] + 2 * gam * rs ** (gam - 1) * ys[:, 1]
               + rg * dys[:, 1])
        parts_r.append(rs)
        parts_h.append(h)
        parts_dh.append(dh)
        parts_ddh.append(ddh)
        state = np.array([h[-1], dh[-1]])
        r_cur = float(rs[-1])
    else:
        state = np.array([seed.h, seed.dh])
        r_cur = seed.r0
    r_target = spec.r_max
    tail = None
    while True:
        if r_target > r_cur:
            rs, ys, dys = _run_kernel(kernels.SYS_PROFILE, r_cur, r_target, state, spec, P)
            skip = 1 if parts_r else 0
            parts_r.append(rs[skip:])
            parts_h.append(ys[skip:, 0])
            parts_dh.append(ys[skip:, 1])
            parts_ddh.append(dys[skip:, 1])
            state = ys[-1].copy()
            r_cur = float(rs[-1])
        if not expander:
            break
        tail = tail_estimate(spec, r_cur, float(state[0]), float(state[1]), cbar)
        last_ext = _last_extremum(np.concatenate(parts_r), np.concatenate(parts_dh))
        if (tail.bound <= spec.limit_tol and r_cur >= 2 * last_ext) or r_cur >= R_CAP:
            break
        r_target = min(R_CAP, max(1.5 * r_cur, 2 * last_ext))
    traj = Trajectory(spec, np.concatenate(parts_r), np.concatenate(parts_h),
                      np.concatenate(parts_dh), np.concatenate(parts_ddh), gam, seed.r0,
                      tail, cbar)
    return traj


def estimate_tail_limit(traj: Trajectory) -> tuple[float, float]:
    """Tail limit and its error bound.

    Raises
    ------
    Unbounded
        If the trajectory is flagged unbounded.
    """
    if not traj.bounded:
        raise Unbounded("trajectory left the compact coordinate range")
    if traj.tail is None:
        raise ValueError("tail limits are defined for expander profiles only")
    return traj.tail.limit, traj.tail.bound


@dataclass(frozen=True)
class MonotoneSeries:
    r: np.ndarray
    V: np.ndarray
    Vtilde: np.ndarray
    F: np.ndarray
    max_increase_V: float
    max_increase_Vtilde: float


def monotone_quantities(traj: Trajectory) -> MonotoneSeries:
    """Series of V, Ṽ and F with their largest relative increments.

    V is normalised by ``k |g|_inf^2`` and Ṽ by the local magnitude, so both
    increments are comparable with the integrator's relative tolerance.
    """
    V, Vt, F = traj.V(), traj.Vtilde(), traj.F()
    scale_V = max(float(traj.spec.k) * traj.spec.profile.sup_g ** 2, 1e-300)
    dV = np.diff(V) / scale_V
    sc = np.maximum(np.maximum(np.abs(Vt[:-1]), np.abs(Vt[1:])), 1e-300)
    dVt = np.diff(Vt) / sc
    mv = float(np.max(dV, initial=0.0))
    mvt = float(np.max(dVt, initial=0.0))
    return MonotoneSeries(traj.r, V, Vt, F, max(mv, 0.0), max(mvt, 0.0))


def energy_space_check(traj: Trajectory) -> bool:
    """Discrete membership test for the finite-energy class.

    Requires a convergent near-origin quadrature of
    ``(|h'|^2 + h^2/r^2) r^(d-1)`` and, when a derivative constant is
    known, ``r^3 |h'| <= C`` for ``r >= 1``.
    """
    r, h, dh = traj.r, traj.h, traj.dh
    if traj.is_constant:
        return True
    d = traj.spec.dim
    integrand = (dh ** 2 + h ** 2 / r ** 2) * r ** (d - 1)
    if not np.all(np.isfinite(integrand)):
        return False
    if decade_ratio(r, integrand) >= 0.8:
        return False
    if traj.cbar is not None:
        m = r >= 1.0
        if np.any(r[m] ** 3 * np.abs(dh[m]) > traj.cbar):
            return False
    return True


def integrate_ivp(spec: ShootSpec, r_start: float, h_start: float, dh_start: float,
                  r_end: float) -> Trajectory:
    """Integrate from arbitrary data ``(h, h')`` at ``r_start`` (no seed)."""
    gam = local_exponent(spec.dim, float(spec.k), float(spec.profile.dG(spec.s0))) \
        if spec.profile.dG(spec.s0) > 0 else 1.0
    P = param_vector(spec, gam)
    rs, ys, dys = _run_kernel(kernels.SYS_PROFILE, r_start, r_end, [h_start, dh_start], spec, P)
    return Trajectory(spec, rs, ys[:, 0], ys[:, 1], dys[:, 1], gam, r_start)
