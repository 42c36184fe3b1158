"""Dirichlet and weighted energies of radial fields, Hardy constants and the
direct minimisation of the weighted energy around an equator.

Fields are continuous and piecewise linear on a radial grid. Gradient terms
use exact element weights and potential terms use lumped nodal weights, so
the discrete Euler-Lagrange equation of the weighted energy is a
divergence-form discretisation of the expander equation.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.special import gamma as gamma_fn

from ._quad import decade_ratio, gauss_legendre
from .errors import DivergentQuadrature, NonConvergence
from .geometry import TargetSurfaceProfile
from .kernels import ldl_pivots, solve_tridiagonal

R_TRUNC = 12.0
N_NODES = 4000
N_GAUSS = 16
SHIFTS = (0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)


def sphere_measure(d: int) -> float:
    """Measure ``c_d`` of the unit sphere in ``R^d``."""
    return 2.0 * math.pi ** (d / 2.0) / gamma_fn(d / 2.0)


def energy_grid(R: float = R_TRUNC, n: int = N_NODES, r_geo: float = 1e-5,
                frac_geo: float = 0.2) -> np.ndarray:
    """Geometric nodes on ``[r_geo, 1]`` and uniform nodes on ``[1, R]``.

    Fields are extended to ``[0, r_geo]`` by their first value; a node at
    the origin itself would carry spurious discrete critical points.
    """
    n_geo = max(2, int(frac_geo * n))
    geo = np.geomspace(r_geo, 1.0, n_geo)
    uni = np.linspace(1.0, R, n - n_geo + 1)[1:]
    return np.concatenate([geo, uni])


@dataclass
class RadialField:
    """Piecewise linear radial field.

    Parameters
    ----------
    r : array
        Increasing grid on ``[0, R]``; when the first node is positive the
        field is taken constant on ``[0, r[0]]``.
    f : array
        Nodal values.
    fixed_end : bool
        Whether ``f(R)`` is held fixed (Dirichlet) in minimisations.
    support : float or None
        Radius beyond which ``f`` vanishes identically, when compactly supported.
    """

    r: np.ndarray
    f: np.ndarray
    fixed_end: bool = True
    support: float | None = None

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.r.shape != self.f.shape or self.r.ndim != 1 or self.r.size < 2:
            raise ValueError("r and f must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(self.r) <= 0) or self.r[0] < 0:
            raise ValueError("grid must be increasing and non-negative")
        if self.support is not None and np.any(self.f[self.r > self.support] != 0):
            raise ValueError("field does not vanish beyond its support radius")

    @classmethod
    def from_function(cls, fn, r, **kw) -> "RadialField":
        r = np.asarray(r, dtype=float)
        return cls(r, np.asarray(fn(r), dtype=float), **kw)

    def __call__(self, x):
        return np.interp(x, self.r, self.f)

    def h1_norm(self, d: float) -> float:
        """``(int (|f'|^2 + f^2/r^2) r^(d-1) dr)^(1/2)`` with P1 quadrature."""
        ops = Discretisation(self.r, d, 1.0, lam=0.0)
        val = ops.stiffness_form(self.f) + float(np.sum(ops.W * self.f ** 2))
        if not math.isfinite(val):
            raise DivergentQuadrature("H1 norm is not finite")
        return math.sqrt(val)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "f"])
            for row in zip(self.r, self.f):
                w.writerow([repr(float(x)) for x in row])


def _element_integrals(a, b, fn, n: int = N_GAUSS):
    """``int_a^b fn`` and ``int_a^b fn * t`` (``t`` the local coordinate) per element."""
    x, w = gauss_legendre(n)
    pts = a[:, None] + (b - a)[:, None] * x[None, :]
    vals = fn(pts) * w[None, :]
    return np.sum(vals, axis=1) * (b - a), np.sum(vals * x[None, :], axis=1) * (b - a)


class Discretisation:
    """Element weights for ``int |f'|^2 w1`` and lumped weights for ``int F w2``.

    ``w1 = r^(d-1) exp(lam r^2/4)`` and ``w2 = k r^(d-3) exp(lam r^2/4)``.
    A grid starting at ``r[0] > 0`` stands for the field extended by the
    constant ``f(r[0])`` on ``[0, r[0]]``.
    """

    def __init__(self, r, d: float, k: float, lam: float = 1.0):
        self.r = np.asarray(r, dtype=float)
        self.d, self.k, self.lam = float(d), float(k), float(lam)
        a, b = self.r[:-1], self.r[1:]
        h = b - a
        w1, _ = _element_integrals(a, b, lambda x: x ** (d - 1.0) * np.exp(lam * x * x / 4.0))
        self.A = w1 / (h * h)
        w2, w2t = _element_integrals(a, b, lambda x: k * x ** (d - 3.0) * np.exp(lam * x * x / 4.0))
        W = np.zeros(self.r.size)
        W[:-1] += w2 - w2t
        W[1:] += w2t
        if self.r[0] > 0:
            # constant extension of the field down to the origin
            inner, _ = _element_integrals(np.zeros(1), self.r[:1],
                                          lambda x: k * x ** (d - 3.0) * np.exp(lam * x * x / 4.0))
            W[0] += inner[0]
        self.W = W

    def stiffness_form(self, f) -> float:
        return float(np.sum(self.A * np.diff(f) ** 2))

    def stiffness_apply(self, f) -> np.ndarray:
        """``(K f)_i`` with ``f^T K f`` equal to :meth:`stiffness_form`."""
        df = self.A * np.diff(f)
        out = np.zeros_like(f)
        out[:-1] -= df
        out[1:] += df
        return out

    def stiffness_bands(self):
        diag = np.zeros(self.r.size)
        diag[:-1] += self.A
        diag[1:] += self.A
        return diag, -self.A


def _check_finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise DivergentQuadrature("non-finite integrand")


def _check_origin(r, density):
    """Grid integrability test near the inner end when the grid avoids ``r = 0``."""
    if r[0] > 0 and r[-1] / r[0] >= 100.0:
        if decade_ratio(r, density) >= 0.8:
            raise DivergentQuadrature("integrand not integrable at the origin")


def _check_gradient_origin(ops: "Discretisation", f):
    """Origin test for the gradient density ``|f'|^2 r^(d-1)`` at element midpoints."""
    r = ops.r
    if r[0] > 0:
        h = np.diff(r)
        _check_origin(0.5 * (r[:-1] + r[1:]), ops.A * np.diff(f) ** 2 / h)


def dirichlet_energy(h: RadialField, d: int, k: float, profile: TargetSurfaceProfile) -> float:
    """``(c_d/2) int_0^R [|h'|^2 + k g(h)^2 / r^2] r^(d-1) dr``.

    Raises
    ------
    DivergentQuadrature
    """
    ops = Discretisation(h.r, d, k, lam=0.0)
    g2 = profile.g(h.f) ** 2
    _check_finite(h.f, g2)
    with np.errstate(divide="ignore", invalid="ignore"):
        _check_origin(h.r, k * g2 * h.r ** (d - 3.0))
    _check_gradient_origin(ops, h.f)
    val = ops.stiffness_form(h.f) + float(np.sum(ops.W * g2))
    return 0.5 * sphere_measure(d) * val


def _weighted(f: RadialField, s_star: float, d: int, k: float, profile, lam: float) -> float:
    ops = Discretisation(f.r, d, k, lam=lam)
    dg2 = profile.g(s_star + f.f) ** 2 - profile.g(s_star) ** 2
    _check_finite(f.f, dg2)
    _check_gradient_origin(ops, f.f)
    return ops.stiffness_form(f.f) + float(np.sum(ops.W * dg2))


def weighted_energy(f: RadialField, s_star: float, d: int, k: float,
                    profile: TargetSurfaceProfile) -> float:
    """``int [|f'|^2 + k (g^2(s*+f) - g^2(s*)) / r^2] r^(d-1) exp(r^2/4) dr`` on the grid.

    Raises
    ------
    DivergentQuadrature
    """
    return _weighted(f, s_star, d, k, profile, 1.0)


def scaled_energy(f: RadialField, s_star: float, d: int, k: float,
                  profile: TargetSurfaceProfile, lam: float) -> float:
    """``E_lam``: the weighted energy with ``exp(lam r^2/4)`` in place of ``exp(r^2/4)``."""
    return _weighted(f, s_star, d, k, profile, lam)


def scaled_energy_identity(f: RadialField, lam: float, s_star: float, d: int, k: float,
                           profile: TargetSurfaceProfile) -> tuple[float, float, float]:
    """Return ``E_lam(f)``, ``lam^(-(d-2)/2) * Ebar(f(./sqrt(lam)))`` and their relative gap.

    The rescaled field lives on the rescaled grid, so both sides share nodal values.
    """
    if not 0 < lam <= 1:
        raise ValueError("lam must lie in (0, 1]")
    lhs = scaled_energy(f, s_star, d, k, profile, lam)
    g = RadialField(f.r * math.sqrt(lam), f.f, f.fixed_end)
    rhs = lam ** (-(d - 2.0) / 2.0) * weighted_energy(g, s_star, d, k, profile)
    return lhs, rhs, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)


def lower_bound_terms(f: RadialField, s_star: float, d: int, k: float,
                      profile: TargetSurfaceProfile, R: float = 5.0) -> tuple[float, float]:
    """Both sides of the coercivity estimate of the weighted energy.

    Returns ``(Ebar(f), B)`` with
    ``B = int |f'|^2 dmu - C R^-2 int_R^inf f^2 r^(d-1) e^(r^2/4) - C(R)``,
    ``C = k sup|(g^2)''|`` and ``C(R) = k g(s*)^2 int_0^R r^(d-3) e^(r^2/4) dr``.
    """
    ops = Discretisation(f.r, d, k, lam=1.0)
    C1 = profile.sup_d2g2
    mass = Discretisation(f.r, d, 1.0, lam=1.0).W * f.r ** 2
    outer = f.r >= R
    tail = float(np.sum(mass[outer] * f.f[outer] ** 2))
    x, w = gauss_legendre(64)
    CR = k * profile.g(s_star) ** 2 * R * float(np.sum(w * (R * x) ** (d - 3.0) * np.exp((R * x) ** 2 / 4)))
    B = ops.stiffness_form(f.f) - k * C1 / R ** 2 * tail - CR
    return weighted_energy(f, s_star, d, k, profile), B


@dataclass
class Minimizer:
    """Result of the weighted-energy minimisation."""

    field: RadialField
    energy: float
    residual: float
    iterations: int
    newton_steps: int
    positive_definite: bool
    s_star: float
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def profile_values(self) -> np.ndarray:
        return self.s_star + self.field.f

    def as_dict(self) -> dict:
        return {"energy": self.energy, "residual": self.residual, "iterations": self.iterations,
                "newton_steps": self.newton_steps, "positive_definite": self.positive_definite,
                "s_star": self.s_star, "h0": float(self.profile_values[0])}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)


class _Functional:
    """Discrete weighted energy restricted to the free nodes."""

    def __init__(self, r, s_star, d, k, profile):
        self.ops = Discretisation(r, d, k, lam=1.0)
        self.s_star, self.profile = float(s_star), profile
        self.g2s = float(profile.g(s_star) ** 2)
        self.n = r.size - 1  # the last node is held at zero

    def full(self, x):
        return np.append(x, 0.0)

    def value(self, x) -> float:
        f = self.full(x)
        return (self.ops.stiffness_form(f)
                + float(np.sum(self.ops.W * (self.profile.g(self.s_star + f) ** 2 - self.g2s))))

    def parts(self, x):
        f = self.full(x)
        Kf = self.ops.stiffness_apply(f)[:-1]
        WG = self.ops.W[:-1] * self.profile.G(self.s_star + x)
        return Kf, WG

    def gradient(self, x) -> np.ndarray:
        Kf, WG = self.parts(x)
        return 2.0 * (Kf + WG)

    def residual(self, x) -> float:
        """Largest Euler-Lagrange (divergence-form) residual per unit nodal weight.

        Measured in units of ``sup |G|``, this is the nodal residual of
        ``r^2 h'' + ((d-1) r + r^3/2) h' - k G(h) = 0`` divided by ``k``.
        """
        Kf, WG = self.parts(x)
        W = self.ops.W[:-1]
        return float(np.max(np.abs(Kf + WG) / W) / self.profile.sup_G)

    def bands(self):
        diag, off = self.ops.stiffness_bands()
        return 2.0 * diag[:-1], 2.0 * off[:-1]

    def hessian(self, x):
        diag, off = self.bands()
        return diag + 2.0 * self.ops.W[:-1] * self.profile.dG(self.s_star + x), off


def _tri_solve(diag, off, b):
    z = np.zeros(1)
    return solve_tridiagonal(np.concatenate([z, off]), diag, np.concatenate([off, z]), b)


def _armijo(F: _Functional, x, fx, g, p, c1: float = 1e-4, max_halvings: int = 60):
    slope = float(np.dot(g, p))
    if slope >= 0:
        return None
    t = 1.0
    for _ in range(max_halvings):
        xn = x + t * p
        fn = F.value(xn)
        if math.isfinite(fn) and fn <= fx + c1 * t * slope:
            return xn, fn
        t *= 0.5
    return None


def minimize_weighted_energy(s_star: float, d: int, k: float, profile: TargetSurfaceProfile,
                             init=None, r=None, tol: float = 1e-10, max_descent: int = 5000,
                             max_newton: int = 100) -> Minimizer:
    """Minimise the truncated weighted energy around the equator ``s_star``.

    Each iteration takes an Armijo-backtracked step along the Newton
    direction of the tridiagonal Hessian, shifted towards the Sobolev
    preconditioner (the stiffness matrix) until it is positive definite;
    the pure Sobolev gradient step is the fallback. ``f`` vanishes at the
    outer radius.

    Parameters
    ----------
    init : callable or array or None
        Initial field; defaults to ``-0.3 exp(-(r-1)^2)``.
    r : array or None
        Grid from :func:`energy_grid` by default.

    Raises
    ------
    NonConvergence
        If the relative Euler-Lagrange residual stays above ``tol``.
    """
    r = energy_grid() if r is None else np.asarray(r, dtype=float)
    if init is None:
        x = -0.3 * np.exp(-(r - 1.0) ** 2)
    elif callable(init):
        x = np.asarray(init(r), dtype=float)
    else:
        x = np.asarray(init, dtype=float).copy()
    F = _Functional(r, s_star, d, k, profile)
    x = x[:-1].copy()
    fx = F.value(x)
    history = [fx]
    pdiag, poff = F.bands()
    it = 0
    newton = 0
    pd = False
    res = F.residual(x)
    # descent phase: Newton is tried from the start and takes over once the
    # Hessian is positive definite and its step is accepted
    while res > tol and it < max_descent + max_newton:
        it += 1
        g = F.gradient(x)
        hd, ho = F.hessian(x)
        step = None
        # Newton, then Hessians shifted towards the Sobolev preconditioner
        for tau in SHIFTS:
            md, mo = hd + tau * pdiag, ho + tau * poff
            if not np.all(ldl_pivots(md, mo) > 0):
                continue
            p = -_tri_solve(md, mo, g)
            if tau == 0.0 and abs(float(np.dot(g, p))) < 1e-13 * (1.0 + abs(fx)):
                # the energy decrease is below round-off: judge by the residual
                if F.residual(x + p) < res:
                    step = (x + p, F.value(x + p))
                    newton += 1
                    break
            step = _armijo(F, x, fx, g, p)
            if step is not None:
                newton += tau == 0.0
                break
        if step is None:
            step = _armijo(F, x, fx, g, -_tri_solve(pdiag, poff, g))
        if step is None:
            break
        xn, fn = step
        x, fx = xn, fn
        history.append(fx)
        res = F.residual(x)
    # full Newton steps settle directions whose energy change is below
    # round-off of the functional, e.g. near-Hardy-critical modes at the origin
    for _ in range(10):
        hd, ho = F.hessian(x)
        if not np.all(ldl_pivots(hd, ho) > 0):
            break
        p = -_tri_solve(hd, ho, F.gradient(x))
        xn = x + p
        rn = F.residual(xn)
        if not rn <= max(res, tol):
            break
        x, res = xn, rn
        newton += 1
        if np.max(np.abs(p)) < 1e-12:
            break
    fx = F.value(x)
    hd, ho = F.hessian(x)
    pd = bool(np.all(ldl_pivots(hd, ho) > 0))
    if res > tol:
        raise NonConvergence(f"Euler-Lagrange residual {res:.3g} after {it} iterations")
    fld = RadialField(r, F.full(x), fixed_end=True)
    return Minimizer(fld, fx, res, it, newton, pd, float(s_star), history)


def _hardy_matrices(r, d: float):
    """Stiffness and mass matrices of ``int |w'|^2 r^(d-1)`` and ``int w^2 r^(d-3)``.

    Both integrands are polynomial on each element, so Gauss-Legendre with
    enough nodes is exact.
    """
    a, b = r[:-1], r[1:]
    h = b - a
    n = max(4, int(math.ceil((d + 2) / 2)) + 1)
    x, w = gauss_legendre(n)
    pts = a[:, None] + h[:, None] * x[None, :]
    kw = np.sum(w[None, :] * pts ** (d - 1.0), axis=1) * h / (h * h)
    p3 = pts ** (d - 3.0)
    m00 = np.sum(w * p3 * (1 - x) ** 2, axis=1) * h
    m01 = np.sum(w * p3 * (1 - x) * x, axis=1) * h
    m11 = np.sum(w * p3 * x * x, axis=1) * h
    N = r.size
    K = np.zeros((N, N))
    M = np.zeros((N, N))
    i = np.arange(N - 1)
    K[i, i] += kw
    K[i + 1, i + 1] += kw
    K[i, i + 1] -= kw
    K[i + 1, i] -= kw
    M[i, i] += m00
    M[i + 1, i + 1] += m11
    M[i, i + 1] += m01
    M[i + 1, i] += m01
    # w(1) = 0
    return K[:-1, :-1], M[:-1, :-1]


def hardy_grid(r_min: float = 1e-20, n: int = 600) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(r_min, 1.0, n)])


def hardy_trial_ratio(d: float, eps: float) -> float:
    """Exact Rayleigh quotient of ``w = r^-beta - 1`` on ``(0, 1)`` with ``beta = (d-2)/2 - eps``."""
    beta = (d - 2.0) / 2.0 - eps
    num = beta * beta / (2.0 * eps)
    den = 1.0 / (2.0 * eps) - 2.0 / (d - 2.0 - beta) + 1.0 / (d - 2.0)
    return num / den


def hardy_quotient(r, w, d: float) -> float:
    """Discrete ``int |w'|^2 r^(d-1) / int w^2 r^(d-3)`` for a P1 field with ``w(1) = 0``."""
    K, M = _hardy_matrices(np.asarray(r, dtype=float), d)
    v = np.asarray(w, dtype=float)[:-1]
    return float(v @ K @ v / (v @ M @ v))


@dataclass
class HardyResult:
    d: int
    best_ratio: float
    target: float
    trial_min: float
    trial_ratios: list[float]
    weighted_max: float

    @property
    def relative_gap(self) -> float:
        return self.best_ratio / self.target - 1.0

    def as_dict(self) -> dict:
        return {"d": self.d, "best_ratio": self.best_ratio, "target": self.target,
                "trial_min": self.trial_min, "weighted_max": self.weighted_max}


def weighted_hardy_ratio(r, f, d: float) -> float:
    """``int f^2 (1 + r^2) r^(d-3) e^(r^2/4) / int |f'|^2 r^(d-1) e^(r^2/4)`` for a P1 field."""
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    num = float(np.sum(Discretisation(r, d, 1.0).W * (1 + r * r) * f * f))
    den = Discretisation(r, d, 1.0).stiffness_form(f)
    return num / den


def hardy_rayleigh(d: int, trials: int = 32, seed: int = 0, r=None) -> HardyResult:
    """Smallest discrete Hardy quotient on ``(0, 1]`` with ``w(1) = 0``.

    The minimum over the discrete space is the lowest generalised eigenvalue
    of the stiffness/mass pair; since the discrete space sits inside the
    continuous one it never undercuts ``(d-2)^2/4``. Random trial fields
    and samples of the weighted inequality on ``(0, 12]`` are reported too.
    """
    if d < 3:
        raise ValueError("d must be at least 3")
    r = hardy_grid() if r is None else np.asarray(r, dtype=float)
    K, M = _hardy_matrices(r, d)
    # diagonal scaling evens out the r^(d-2) spread of both matrices
    s = 1.0 / np.sqrt(np.diag(K))
    Ks, Ms = K * s[:, None] * s[None, :], M * s[:, None] * s[None, :]
    best = float(eigh(Ks, Ms, eigvals_only=True, subset_by_index=[0, 0])[0])
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        beta = rng.uniform(0.05, (d - 2) / 2.0 - 1e-3)
        c = rng.normal(size=3)
        rp = np.maximum(r, r[r > 0][0])
        w = c[0] * (rp ** -beta - 1.0) + c[1] * (1 - r) + c[2] * np.sin(np.pi * r) ** 2
        v = w[:-1]
        ratios.append(float(v @ K @ v / (v @ M @ v)))
    rw = energy_grid(n=800)
    wmax = 0.0
    for _ in range(trials):
        c = rng.uniform(0.5, 6.0)
        f = rng.normal() * np.exp(-rng.uniform(0.1, 2.0) * rw ** 2) * (rw < c) * (c - rw)
        wmax = max(wmax, weighted_hardy_ratio(rw, f, d))
    return HardyResult(int(d), best, (d - 2) ** 2 / 4.0, float(min(ratios)), ratios, wmax)
