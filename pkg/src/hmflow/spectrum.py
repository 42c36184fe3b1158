"""Linear stability of self-similar profiles.

The linearisation of the self-similar flow at a profile psi is the weighted
Sturm-Liouville operator

    A w = -w'' - ((d - 1)/rho + rho/2) w' + k G'(psi(rho)) w / rho^2

on ``L^2(mu)`` with ``d mu = exp(rho^2/4) rho^(d-1) d rho``. Eigenvalues are
counted through the zeros of the solution ``v_E`` of ``A v = E v`` that is
regular at the origin (oscillation counting), and located by bisection on
``E``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._quad import gauss_legendre, hermite5
from .errors import DegenerateMode, TangencySuspected
from .shooting import (Equation, ShootSpec, Trajectory, _run_kernel,
                       local_exponent, param_vector, series_seed, switch_radius)

RHO_MAX = 15.0
SPECTRAL_ATOL = 1e-60
EIG_TOL = 1e-8


@dataclass(frozen=True)
class LinearizedProblem:
    """Linearisation at the profile ``spec`` (``spec.a == 0`` is the constant map)."""

    spec: ShootSpec
    rho_max: float = RHO_MAX

    def __post_init__(self):
        if self.spec.equation != Equation.EXPANDER:
            raise ValueError("the self-similar linearisation needs the expander equation")
        object.__setattr__(self, "spec", self.spec.with_(atol=SPECTRAL_ATOL, r_max=self.rho_max))

    @classmethod
    def from_trajectory(cls, traj: Trajectory, rho_max: float = RHO_MAX) -> "LinearizedProblem":
        return cls(traj.spec, rho_max)

    @classmethod
    def constant(cls, profile, d: int, k: float, s0: float, rho_max: float = RHO_MAX):
        return cls(ShootSpec(profile, d, k, s0, 0.0), rho_max)

    @property
    def d(self) -> float:
        return self.spec.dim

    @property
    def k(self) -> float:
        return float(self.spec.k)

    @property
    def dG0(self) -> float:
        return float(self.spec.profile.dG(self.spec.s0))

    @property
    def gamma(self) -> float:
        return local_exponent(self.d, self.k, self.dG0)

    def origin_exponents(self) -> tuple[float, float]:
        """Roots ``gamma1 < 0 < gamma2`` of ``x^2 + (d-2) x - k G'(psi(0)) = 0``."""
        g2 = self.gamma
        return -(self.d - 2.0) - g2, g2

    def potential(self, rho, psi) -> np.ndarray:
        """``q = k G'(psi) / rho^2``."""
        rho = np.asarray(rho, dtype=float)
        return self.k * self.spec.profile.dG(psi) / (rho * rho)

    def form_lower_bound(self, n: int = 2000) -> float:
        """Lower bound of the quadratic form from the Hardy inequality.

        Uses ``int |w'|^2 dmu >= (d-2)^2/4 int w^2/rho^2 dmu`` so that
        ``<Aw, w> >= inf ((d-2)^2/4 + k G'(psi)) / rho^2 |w|^2``.
        """
        sol = solve_EF(self, 0.0)
        rho = np.geomspace(sol.rho[0], self.rho_max, n)
        psi = sol.psi_at(rho)
        val = ((self.d - 2.0) ** 2 / 4.0 + self.k * self.spec.profile.dG(psi)) / rho ** 2
        return float(min(0.0, np.min(val)))


def _tail_series(d: float, E: float, kappa: float, z: float, n_max: int = 60):
    """Asymptotic sum ``S(z)`` and ``S'(z)`` of the decaying far-field solution.

    For the potential ``kappa/rho^2`` the solution decaying like
    ``exp(-z) z^(E - d/2)`` with ``z = rho^2/4`` is that power times
    ``S(z) = sum_n (-1)^n p_n / (n! z^n)``, ``p_n = prod_{j<n} ((d/2-E+j)(1-E+j) - kappa/4)``.
    The sum is truncated at its smallest term.
    """
    S, dS = 1.0, 0.0
    term = 1.0
    prev = math.inf
    for n in range(1, n_max + 1):
        j = n - 1
        factor = (d / 2.0 - E + j) * (1.0 - E + j) - kappa / 4.0
        term = -term * factor / (n * z)
        if term == 0.0:
            break
        if abs(term) >= prev:
            break
        S += term
        dS += -n * term / z
        prev = abs(term)
    return S, dS


def decaying_logderiv(d: float, E: float, kappa: float, rho: float) -> float:
    """``phi'/phi`` of the far-field solution decaying like ``exp(-rho^2/4) rho^(2E-d)``."""
    z = rho * rho / 4.0
    S, dS = _tail_series(d, E, kappa, z)
    return -rho / 2.0 + (2.0 * E - d) / rho + 0.5 * rho * dS / S


@dataclass
class EigenSolution:
    """Solution ``v_E`` together with the profile on the same radial grid."""

    problem: LinearizedProblem
    E: float
    rho: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    ddpsi: np.ndarray
    lam3: float = field(default=0.0)

    @property
    def ddv(self) -> np.ndarray:
        p = self.problem
        drift = (p.d - 1.0) / self.rho + 0.5 * self.rho
        return -drift * self.dv + (p.potential(self.rho, self.psi) - self.E) * self.v

    def __call__(self, x, nu: int = 0):
        """Quintic Hermite dense output of ``v`` (``nu`` in 0, 1)."""
        if nu == 0:
            return hermite5(x, self.rho, self.v, self.dv, self.ddv, 0)
        return hermite5(x, self.rho, self.v, self.dv, self.ddv, 1)

    def psi_at(self, x):
        return hermite5(x, self.rho, self.psi, self.dpsi, self.ddpsi, 0)

    @property
    def tail_indicator(self) -> float:
        """Sign of the slowly decaying component relative to ``v(rho_max)``.

        Negative when ``v`` must cross zero once more beyond ``rho_max``.
        """
        return float((self.dv[-1] - self.lam3 * self.v[-1]) * self.v[-1])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "v", "dv"])
            for row in zip(self.rho, self.v, self.dv):
                w.writerow([repr(float(x)) for x in row])


def solve_EF(problem: LinearizedProblem, E: float) -> EigenSolution:
    """Integrate ``A v = E v`` from the origin with ``rho^-gamma2 (v + rho v') -> 1``.

    The profile is integrated alongside so both share one grid.

    Raises
    ------
    StepFailure, BlowUp
    """
    spec = problem.spec
    seed = series_seed(spec)
    gam = seed.gamma
    P = param_vector(spec, gam, float(E))
    D, c, k = spec.dim, spec.fric, float(spec.k)
    m = 2.0 * gam + D - 1.0
    r0 = seed.r0
    Gd0 = spec.profile.G_derivs(spec.s0)
    u0 = 1.0 / (1.0 + gam)
    # u = u0 (1 + al r^gamma + be r^2) near the origin
    al = k * Gd0[2] * spec.a / (gam * (gam + m - 1.0))
    be = (c * gam + E) / (2.0 * (m + 1.0))
    u = u0 * (1.0 + al * r0 ** gam + be * r0 * r0)
    du = u0 * (gam * al * r0 ** (gam - 1) + 2.0 * be * r0)
    r_sw = switch_radius(spec, seed)
    rs, ys, dys = _run_kernel(kernels.SYS_COUPLED_REG, r0, r_sw,
                              [seed.y, seed.dy, u, du], spec, P)
    rg = rs ** gam
    rg1 = gam * rs ** (gam - 1)
    h = spec.s0 + rg * ys[:, 0]
    dh = rg1 * ys[:, 0] + rg * ys[:, 1]
    ddh = (gam * (gam - 1) * rs ** (gam - 2) * ys[:, 0] + 2 * rg1 * ys[:, 1] + rg * dys[:, 1])
    v = rg * ys[:, 2]
    dv = rg1 * ys[:, 2] + rg * ys[:, 3]
    state = np.array([h[-1], dh[-1], v[-1], dv[-1]])
    # v is linear in its data: integrate in chunks short enough that the
    # growing branch cannot overflow, rescaling v between chunks
    chunk = min(1.0, 150.0 / math.sqrt(max(abs(float(E)), 1.0)))
    parts = [(rs, v, dv, h, dh, ddh)]
    r_at = float(rs[-1])
    while r_at < problem.rho_max:
        r_next = min(problem.rho_max, r_at + chunk)
        rs2, ys2, dys2 = _run_kernel(kernels.SYS_COUPLED, r_at, r_next, state, spec, P)
        parts.append((rs2[1:], ys2[1:, 2], ys2[1:, 3], ys2[1:, 0], ys2[1:, 1], dys2[1:, 1]))
        state = ys2[-1].copy()
        scale = max(abs(state[2]), abs(state[3]))
        if scale > 1e100:
            state[2:] /= scale
            parts = [(q[0], q[1] / scale, q[2] / scale) + q[3:] for q in parts]
        r_at = float(rs2[-1])
    cols = [np.concatenate([q[j] for q in parts]) for j in range(6)]
    rho = cols[0]
    sol = EigenSolution(problem, float(E), rho, cols[1], cols[2], cols[3], cols[4], cols[5])
    kappa = k * float(spec.profile.dG(sol.psi[-1]))
    sol.lam3 = decaying_logderiv(D, float(E), kappa, float(rho[-1]))
    return sol


def count_zeros(sol: EigenSolution) -> int:
    """Zeros of ``v_E`` on ``(0, inf)``: sign changes plus one hidden tail zero.

    Beyond ``rho_max`` the solution is a mix of the fast-decaying branch and
    the slowly decaying one; it has one more zero exactly when these carry
    opposite signs, read off from ``v' - lambda3 v`` at ``rho_max``.

    Raises
    ------
    TangencySuspected
        If two sign changes fall within three steps, far below the local
        oscillation wavelength that the step control resolves.
    """
    s = np.sign(sol.v)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    if idx.size > 1 and np.any(np.diff(idx) < 3):
        i = int(idx[np.argmax(np.diff(idx) < 3)])
        raise TangencySuspected(f"double zero of v_E suspected near rho = {sol.rho[i]:.6g}")
    return int(idx.size) + int(sol.tail_indicator < 0)


def eigenvalue_count_below(problem: LinearizedProblem, E0: float) -> int:
    """Number of eigenvalues below ``E0``."""
    if E0 <= problem.form_lower_bound():
        return 0
    return count_zeros(solve_EF(problem, E0))


def closed_form_spectrum(d: float, gamma: float, n: int) -> list[float]:
    """Eigenvalues ``d/2 + gamma/2 + j`` (``j < n``) at a constant critical profile.

    They come from eigenfunctions ``rho^gamma exp(-rho^2/4) L_j(rho^2/4)`` with
    generalised Laguerre polynomials ``L_j`` of parameter ``d/2 + gamma - 1``.
    """
    return [d / 2.0 + gamma / 2.0 + j for j in range(n)]


def default_window(problem: LinearizedProblem) -> tuple[float, float]:
    return problem.form_lower_bound() - 1.0, max(5.0, problem.d + 3.0 * problem.gamma)


def find_eigenvalues(problem: LinearizedProblem, E_lo: float | None = None,
                     E_hi: float | None = None, tol: float = EIG_TOL) -> list[tuple[float, float]]:
    """Brackets ``(lo, hi)`` of width below ``tol`` around each eigenvalue in the window.

    Intervals are split until each holds one unit jump of the zero count,
    which is then bisected.
    """
    if E_lo is None or E_hi is None:
        lo_d, hi_d = default_window(problem)
        E_lo = lo_d if E_lo is None else E_lo
        E_hi = hi_d if E_hi is None else E_hi
    if not E_lo < E_hi:
        raise ValueError("need E_lo < E_hi")
    cache: dict[float, int] = {}

    def N(E):
        if E not in cache:
            cache[E] = eigenvalue_count_below(problem, E)
        return cache[E]

    out = []
    stack = [(float(E_lo), float(E_hi))]
    while stack:
        a, b = stack.pop()
        na, nb = N(a), N(b)
        if nb <= na:
            continue
        if nb - na > 1 and b - a > tol:
            mid = 0.5 * (a + b)
            stack += [(mid, b), (a, mid)]
            continue
        while b - a > tol:
            mid = 0.5 * (a + b)
            if N(mid) > na:
                b = mid
            else:
                a = mid
        out.append((a, b))
    return sorted(out)


def eigenvalues(problem: LinearizedProblem, E_lo=None, E_hi=None, tol: float = EIG_TOL) -> list[float]:
    """Midpoints of the brackets from :func:`find_eigenvalues`."""
    return [0.5 * (a + b) for a, b in find_eigenvalues(problem, E_lo, E_hi, tol)]


def eigenpair(problem: LinearizedProblem, bracket: tuple[float, float],
              tol: float = 1e-13) -> EigenSolution:
    """Refine an eigenvalue bracket to ``tol`` and return ``v_E`` at its midpoint.

    The slowly decaying branch enters ``v_E`` in proportion to the distance
    from the eigenvalue and grows like ``exp(rho^2/4)`` relative to the
    eigenfunction, so quadratures over ``dmu`` need a much tighter bracket
    than the eigenvalue itself.
    """
    a, b = bracket
    na = eigenvalue_count_below(problem, a)
    while b - a > tol * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        if not a < mid < b:
            break
        if eigenvalue_count_below(problem, mid) > na:
            b = mid
        else:
            a = mid
    return solve_EF(problem, 0.5 * (a + b))


def _mu_quadrature(sol: EigenSolution, R: float, fn, n_gauss: int = 8) -> float:
    """``int_0^R fn(rho, v, v', psi) dmu`` on the step grid by Gauss-Legendre."""
    x, w = gauss_legendre(n_gauss)
    r = sol.rho[sol.rho <= R]
    if r[-1] < R:
        r = np.append(r, R)
    a, b = r[:-1], r[1:]
    pts = a[:, None] + (b - a)[:, None] * x[None, :]
    v, dv, psi = sol(pts), sol(pts, 1), sol.psi_at(pts)
    d = sol.problem.d
    mu = np.exp(pts * pts / 4.0) * pts ** (d - 1.0)
    return float(np.sum(np.sum(w[None, :] * fn(pts, v, dv, psi) * mu, axis=1) * (b - a)))


def rayleigh_quotient(sol: EigenSolution) -> float:
    """``int (|v'|^2 + q v^2) dmu / int v^2 dmu`` truncated where ``v^2 mu`` is smallest.

    The truncation point sits past the last zero and the last bump of
    ``v^2 mu``, where the computed ``v`` is still dominated by the square-integrable branch.
    """
    p = sol.problem
    mu = np.exp(sol.rho ** 2 / 4.0) * sol.rho ** (p.d - 1.0)
    s = np.sign(sol.v)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    start = int(idx[-1]) + 1 if idx.size else 0
    dens = sol.v ** 2 * mu
    j, n = start, dens.size
    # climb the last bump, then descend into the valley before the tail takes over
    while j + 1 < n and dens[j + 1] >= dens[j]:
        j += 1
    while j + 1 < n and dens[j + 1] <= dens[j]:
        j += 1
    R = float(sol.rho[j])
    num = _mu_quadrature(sol, R, lambda r, v, dv, psi: dv * dv + p.potential(r, psi) * v * v)
    den = _mu_quadrature(sol, R, lambda r, v, dv, psi: v * v)
    return num / den


def weighted_poincare_ratio(rho, w, dw, d: float) -> float:
    """``int rho^2 w^2 dmu / int |w'|^2 dmu`` by the trapezoidal rule."""
    from scipy.integrate import trapezoid

    mu = np.exp(rho ** 2 / 4.0) * rho ** (d - 1.0)
    return float(trapezoid(rho ** 2 * w ** 2 * mu, rho) / trapezoid(dw ** 2 * mu, rho))


@dataclass
class TranslationCheck:
    """Comparison of ``v_1`` with ``rho psi'``."""

    residual: float
    operator_residual: float
    zeros: int
    extrema: int


def translation_mode_check(problem: LinearizedProblem, rho0: float | None = None) -> TranslationCheck:
    """Compare normalised ``v_1`` with normalised ``rho psi'`` on ``[rho0, rho_max/2]``.

    Also reports the relative residual of ``(A - 1)(rho psi')`` evaluated
    from the profile equation alone.

    Raises
    ------
    DegenerateMode
        For a constant profile.
    """
    spec = problem.spec
    if spec.a == 0.0:
        raise DegenerateMode("psi is constant, so rho psi' vanishes")
    sol = solve_EF(problem, 1.0)
    rho0 = sol.rho[0] if rho0 is None else rho0
    sel = (sol.rho >= rho0) & (sol.rho <= 0.5 * problem.rho_max)
    r = sol.rho[sel]
    w = r * sol.dpsi[sel]
    v = sol.v[sel]
    nw, nv = w / np.max(np.abs(w)), v / np.max(np.abs(v))
    if np.dot(nw, nv) < 0:
        nv = -nv
    residual = float(np.max(np.abs(nw - nv)))
    # (A - 1)(rho psi') from psi, psi', psi'' and psi''' of the profile equation
    d, k = problem.d, problem.k
    psi, dpsi, ddpsi = sol.psi[sel], sol.dpsi[sel], sol.ddpsi[sel]
    G, dG = spec.profile.G(psi), spec.profile.dG(psi)
    drift = (d - 1.0) / r + 0.5 * r
    d3psi = ((d - 1.0) / r ** 2 - 0.5) * dpsi - drift * ddpsi + k * dG * dpsi / r ** 2 - 2 * k * G / r ** 3
    w1 = dpsi + r * ddpsi
    w2 = 2 * ddpsi + r * d3psi
    q = k * dG / r ** 2
    Aw = -w2 - drift * w1 + q * w
    scale = np.abs(w2) + np.abs(drift * w1) + np.abs(q * w) + np.abs(w)
    op_res = float(np.max(np.abs(Aw - w) / np.maximum(scale, 1e-300)))
    ext = int(np.count_nonzero(np.sign(sol.dpsi[:-1]) * np.sign(sol.dpsi[1:]) < 0))
    return TranslationCheck(residual, op_res, count_zeros(sol), ext)


@dataclass
class DecayReport:
    """Growth or decay exponents of perturbations in the original variables."""

    n_below_one: int
    eigenvalues_below_one: list[float]
    exponents: list[float]
    bound_exponent: float | None

    def as_dict(self) -> dict:
        return {"n_below_one": self.n_below_one, "eigenvalues_below_one": self.eigenvalues_below_one,
                "exponents": self.exponents, "bound_exponent": self.bound_exponent}


def decay_exponent(problem: LinearizedProblem) -> DecayReport:
    """Exponent ``d/2 - 2`` when no eigenvalue lies below one, else one growing
    exponent ``(1 - lambda_j) + d/2 - 2`` per eigenvalue ``lambda_j < 1``."""
    d = problem.d
    n1 = eigenvalue_count_below(problem, 1.0)
    if n1 == 0:
        return DecayReport(0, [], [], d / 2.0 - 2.0)
    lo = default_window(problem)[0]
    lams = eigenvalues(problem, lo, 1.0)
    return DecayReport(n1, lams, [1.0 - lam + d / 2.0 - 2.0 for lam in lams], None)


@dataclass
class SpectralReport:
    threshold: float
    zero_count: int
    eigenvalue_count: int
    eigenvalues: list[float]
    brackets: list[tuple[float, float]]
    translation_residual: float | None

    def as_dict(self) -> dict:
        return {"threshold": self.threshold, "zero_count": self.zero_count,
                "eigenvalue_count": self.eigenvalue_count, "eigenvalues": self.eigenvalues, "translation_residual": self.translation_residual}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)


def spectral_report(problem: LinearizedProblem, E0: float = 1.0, E_lo=None, E_hi=None) -> SpectralReport:
    """Zero count at ``E0``, eigenvalues in the window and the translation residual."""
    N = eigenvalue_count_below(problem, E0)
    lo_d, hi_d = default_window(problem)
    brackets = find_eigenvalues(problem, lo_d if E_lo is None else E_lo, hi_d if E_hi is None else E_hi)
    lams = [0.5 * (a + b) for a, b in brackets]
    tr = None if problem.spec.a == 0.0 else translation_mode_check(problem).residual
    return SpectralReport(float(E0), N, sum(lam < E0 for lam in lams), lams, brackets, tr)
