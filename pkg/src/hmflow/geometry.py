"""Rotationally symmetric targets, critical levels and minimality tests.

The target carries the metric ``ds^2 + g(s)^2 dw^2``. Everything downstream
only needs g through ``G = g g'`` and its derivatives, so the profile object
exposes vectorised evaluators for both and a compact encoding consumed by the
compiled kernels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from . import kernels
from .errors import DegenerateCritical, NoFlankingMinima, NotAnEquator, SchemaError

GRID_PER_PERIOD = 10_000
ROOT_XTOL = 1e-12
DEGENERATE_TOL = 1e-8
CRITERION_TOL = 1e-10


class TargetSurfaceProfile:
    """Metric profile g of a rotationally symmetric target.

    Use the constructors :meth:`sphere`, :meth:`perturbed_sphere`,
    :meth:`spline` or :meth:`from_config` rather than ``__init__``.

    Parameters
    ----------
    kind : int
        Kernel encoding, ``kernels.KIND_TRIG`` or ``kernels.KIND_SPLINE``.
    par, xb, cf : ndarray
        Kernel parameters, breakpoints and spline coefficients.
    period : float or None
        Period of g, or None for a profile on the interval ``[xb[0], xb[-1]]``.
    config : dict
        The JSON description the profile was built from.
    """

    def __init__(self, kind, par, xb, cf, period, config, spline=None):
        self.kind = int(kind)
        self.par = np.ascontiguousarray(par, dtype=float)
        self.xb = np.ascontiguousarray(xb, dtype=float)
        self.cf = np.ascontiguousarray(cf, dtype=float)
        self.period = None if period is None else float(period)
        self.config = dict(config)
        self._spline = spline
        s = self.sample_grid()
        d = self.derivs(s)
        G = d[0] * d[1]
        dG = d[1] ** 2 + d[0] * d[2]
        self.sup_g = float(np.max(np.abs(d[0])))
        self.sup_G = float(np.max(np.abs(G)))
        self.sup_dG = float(np.max(np.abs(dG)))
        self.theta = float(np.max(-dG))
        self.sup_d2G = float(np.max(np.abs(3 * d[1] * d[2] + d[0] * d[3])))
        self.sup_d2g2 = float(np.max(np.abs(2.0 * dG)))

    # -- construction ---------------------------------------------------
    @classmethod
    def sphere(cls) -> "TargetSurfaceProfile":
        """Round sphere, g = sin s."""
        return cls(kernels.KIND_TRIG, [1.0, 0.0], [0.0, 1.0], np.zeros((4, 1)),
                   2.0 * math.pi, {"type": "sphere"})

    @classmethod
    def perturbed_sphere(cls, epsilon: float) -> "TargetSurfaceProfile":
        """g(s) = sin s (1 + eps sin^2 s), written as a sum of sines."""
        eps = float(epsilon)
        if eps <= -1.0:
            raise ValueError("epsilon must exceed -1")
        return cls(kernels.KIND_TRIG, [1.0 + 0.75 * eps, 0.25 * eps], [0.0, 1.0],
                   np.zeros((4, 1)), 2.0 * math.pi,
                   {"type": "perturbed_sphere", "epsilon": eps})

    @classmethod
    def spline(cls, knots: Sequence[float], values: Sequence[float],
               period: float | None = None, validate: bool = True,
               pole_tol: float = 1e-3) -> "TargetSurfaceProfile":
        """Cubic spline through tabulated ``(knots, values)``.

        With a period the knots cover one period ``[x0, x0 + period)`` and the
        spline is periodic; otherwise a not-a-knot spline on the knot range.
        """
        x = np.asarray(knots, dtype=float)
        y = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 4:
            raise ValueError("knots and values must be 1-d arrays of equal length >= 4")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knots must be strictly increasing")
        if period is not None:
            if not x[-1] < x[0] + period:
                raise ValueError("knots must lie inside one period")
            xs = np.append(x, x[0] + period)
            ys = np.append(y, y[0])
            sp = CubicSpline(xs, ys, bc_type="periodic")
        else:
            sp = CubicSpline(x, y)
        cfg = {"type": "spline", "knots": x.tolist(), "values": y.tolist(), "period": period}
        prof = cls(kernels.KIND_SPLINE, [0.0 if period is None else float(period), 0.0],
                   sp.x, sp.c, period, cfg, spline=sp)
        if validate:
            prof.validate(pole_tol=pole_tol)
        return prof

    @classmethod
    def from_function(cls, fn, period: float, n_knots: int = 2048, **kw) -> "TargetSurfaceProfile":
        """Periodic spline sampled from a callable ``fn`` on one period."""
        x = np.linspace(0.0, period, n_knots, endpoint=False)
        return cls.spline(x, fn(x), period=period, **kw)

    @classmethod
    def from_config(cls, cfg: dict, path: str = "/manifold") -> "TargetSurfaceProfile":
        """Build a profile from its JSON description."""
        if not isinstance(cfg, dict):
            raise SchemaError(path, "object expected")
        typ = cfg.get("type")
        if typ is None:
            raise SchemaError(path + "/type", "required")
        if typ == "sphere":
            return cls.sphere()
        if typ == "perturbed_sphere":
            if "epsilon" not in cfg:
                raise SchemaError(path + "/epsilon", "required")
            eps = cfg["epsilon"]
            if not isinstance(eps, (int, float)) or isinstance(eps, bool) or eps <= -1:
                raise SchemaError(path + "/epsilon", "number > -1 expected")
            return cls.perturbed_sphere(float(eps))
        if typ == "spline":
            for key in ("knots", "values"):
                if key not in cfg:
                    raise SchemaError(f"{path}/{key}", "required")
                if not isinstance(cfg[key], list) or not all(
                        isinstance(v, (int, float)) and not isinstance(v, bool) for v in cfg[key]):
                    raise SchemaError(f"{path}/{key}", "array of numbers expected")
            per = cfg.get("period")
            if per is not None and (not isinstance(per, (int, float)) or per <= 0):
                raise SchemaError(path + "/period", "positive number expected")
            try:
                return cls.spline(cfg["knots"], cfg["values"], per)
            except ValueError as exc:
                raise SchemaError(path, str(exc)) from None
        raise SchemaError(path + "/type", f"unknown manifold type {typ!r}")

    # -- evaluation -------------------------------------------------------
    @property
    def domain(self) -> tuple[float, float]:
        """Coordinate range: one period, or the interval of definition."""
        if self.period is None:
            return float(self.xb[0]), float(self.xb[-1])
        x0 = float(self.xb[0]) if self.kind == kernels.KIND_SPLINE else 0.0
        return x0, x0 + self.period

    @property
    def h_bounds(self) -> tuple[float, float]:
        """Bounds a trajectory must respect (infinite for periodic targets)."""
        if self.period is None:
            return self.domain
        return -math.inf, math.inf

    def sample_grid(self) -> np.ndarray:
        lo, hi = self.domain
        n = GRID_PER_PERIOD if self.period is not None else max(
            GRID_PER_PERIOD, int(GRID_PER_PERIOD * (hi - lo) / (2 * math.pi)))
        return np.linspace(lo, hi, n + 1)

    def derivs(self, s) -> np.ndarray:
        """Array ``(5, ...)`` with g and its first four derivatives."""
        s = np.asarray(s, dtype=float)
        if self.kind == kernels.KIND_TRIG:
            al, be = self.par
            s1, c1 = np.sin(s), np.cos(s)
            s3, c3 = np.sin(3 * s), np.cos(3 * s)
            return np.stack([al * s1 - be * s3, al * c1 - 3 * be * c3,
                             -al * s1 + 9 * be * s3, -al * c1 + 27 * be * c3,
                             al * s1 - 81 * be * s3])
        sp = self._spline
        x = s
        if self.period is not None:
            x = self.xb[0] + np.mod(s - self.xb[0], self.period)
        return np.stack([sp(x), sp(x, 1), sp(x, 2), sp(x, 3), np.zeros_like(x)])

    def g(self, s):
        return self.derivs(s)[0]

    def dg(self, s):
        return self.derivs(s)[1]

    def G_derivs(self, s) -> np.ndarray:
        """Array ``(4, ...)`` with G = g g' and its first three derivatives."""
        g0, g1, g2, g3, g4 = self.derivs(s)
        return np.stack([g0 * g1, g1 * g1 + g0 * g2, 3 * g1 * g2 + g0 * g3,
                         3 * g2 * g2 + 4 * g1 * g3 + g0 * g4])

    def G(self, s):
        d = self.derivs(s)
        return d[0] * d[1]

    def dG(self, s):
        d = self.derivs(s)
        return d[1] ** 2 + d[0] * d[2]

    def kernel_args(self):
        """Positional profile arguments for the compiled kernels."""
        return self.kind, self.par, self.xb, self.cf

    # -- validation -------------------------------------------------------
    def poles(self) -> list[float]:
        """Zeros of g inside the domain window."""
        lo, hi = self.domain
        return [lev.s for lev in classify_levels(self, (lo, hi)).levels if lev.tag == LevelTag.POLE]

    def validate(self, pole_tol: float = 1e-3, sym_tol: float | None = None) -> None:
        """Check pole smoothness, symmetry about poles and finite growth.

        Raises
        ------
        ValueError
            With a description of the violated invariant.
        """
        if sym_tol is None:
            sym_tol = pole_tol
        if not (math.isfinite(self.sup_d2g2) and math.isfinite(self.sup_g)):
            raise ValueError("profile violates the growth condition")
        levels = classify_levels(self, self.domain)
        deltas = np.linspace(0.0, 0.5, 51)[1:]
        for lev in levels.levels:
            if lev.tag != LevelTag.POLE:
                continue
            slope = abs(float(self.dg(lev.s)))
            if abs(slope - 1.0) > pole_tol:
                raise ValueError(f"|g'| = {slope:.6g} at pole {lev.s:.6g}, expected 1")
            left = self.g(lev.s - deltas)
            right = self.g(lev.s + deltas)
            if np.max(np.abs(left + right)) > sym_tol:
                raise ValueError(f"g is not odd about the pole {lev.s:.6g}")

    def describe(self) -> dict:
        return dict(self.config)


@dataclass(frozen=True)
class Eigenmap:
    """Eigenmap of the sphere S^{d-1} with degree l and eigenvalue k."""

    d: int
    l: int
    k: int

    @property
    def corotational(self) -> bool:
        return self.l == 1


def eigenmap_eigenvalue(d: int, l: int) -> Eigenmap:
    """Return the eigenmap data with ``k = l (d - 2 + l)``."""
    if int(d) != d or d < 3:
        raise ValueError("d must be an integer >= 3")
    if int(l) != l or l < 1:
        raise ValueError("l must be an integer >= 1")
    d, l = int(d), int(l)
    return Eigenmap(d, l, l * (d - 2 + l))


class LevelTag(str, Enum):
    POLE = "pole"
    EQUATOR = "equator"
    MINIMAL_SPHERE = "minimal_sphere"


@dataclass(frozen=True)
class CriticalLevel:
    s: float
    tag: LevelTag
    dG: float


@dataclass(frozen=True)
class LevelClassification:
    levels: tuple[CriticalLevel, ...]

    def of(self, tag: LevelTag) -> list[float]:
        return [lev.s for lev in self.levels if lev.tag == tag]

    @property
    def tags(self) -> list[str]:
        return [lev.tag.value for lev in self.levels]


def _roots_of(fn, lo: float, hi: float, n: int) -> list[float]:
    """Sign-change roots of a vectorised ``fn`` on a uniform grid."""
    x = np.linspace(lo, hi, n + 1)
    y = fn(x)
    roots = []
    scale = max(1.0, float(np.max(np.abs(y))))
    exact = np.abs(y) <= 1e-14 * scale
    for i in np.flatnonzero(exact):
        roots.append(float(x[i]))
    sgn = np.sign(np.where(exact, 0.0, y))
    idx = np.flatnonzero(sgn[:-1] * sgn[1:] < 0)
    f_scalar = lambda t: float(fn(np.array(t)))
    for i in idx:
        roots.append(brentq(f_scalar, x[i], x[i + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps))
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if not merged or r - merged[-1] > 1e-9:
            merged.append(r)
    return merged


def classify_levels(profile: TargetSurfaceProfile, window: tuple[float, float]) -> LevelClassification:
    """Locate and tag every critical level of g² inside ``window``.

    Raises
    ------
    DegenerateCritical
        If a root of G has ``|G'|`` below ``DEGENERATE_TOL``.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("empty window")
    span = hi - lo
    per = profile.period if profile.period is not None else 2 * math.pi
    n = max(64, int(math.ceil(GRID_PER_PERIOD * span / per)))
    pad = 3.0 * span / n
    dlo, dhi = profile.domain
    a, b = lo - pad, hi + pad
    if profile.period is None:
        a, b = max(a, dlo), min(b, dhi)
    roots = [r for r in _roots_of(profile.G, a, b, n + 6) if lo - 1e-12 <= r <= hi + 1e-12]
    levels = []
    for r in roots:
        g0, g1, g2 = profile.derivs(r)[:3]
        dG = float(g1 * g1 + g0 * g2)
        if abs(dG) < DEGENERATE_TOL:
            raise DegenerateCritical(f"G'({r:.12g}) = {dG:.3g}")
        if abs(g0) < 1e-9:
            tag = LevelTag.POLE
        elif dG < 0:
            tag = LevelTag.EQUATOR
        else:
            tag = LevelTag.MINIMAL_SPHERE
        levels.append(CriticalLevel(float(r), tag, dG))
    return LevelClassification(tuple(levels))


class Verdict(str, Enum):
    GLOBALLY = "GloballyMinimising"
    LOCALLY = "LocallyMinimising"
    NOT_LOCALLY = "NotLocallyMinimising"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of the equator minimality test.

    ``lhs`` is ``-4 k G'(s_star)``, ``rhs`` is ``(d-2)^2``, ``S`` the radius of
    the coordinate band on which the global condition is checked and
    ``band_max`` the largest ``-4 k G'`` found on that band.
    """

    s_star: float
    d: int
    k: int
    verdict: Verdict
    lhs: float
    rhs: float
    S: float
    band_max: float
    theta: float
    c1: bool | None = None
    c2: bool | None = None

    def as_dict(self) -> dict:
        out = {f: getattr(self, f) for f in self.__dataclass_fields__}
        out["verdict"] = self.verdict.value
        return out


def _band_max(fn, lo: float, hi: float, per: float) -> float:
    """Maximum of a smooth vectorised ``fn`` on ``[lo, hi]``: grid plus polish."""
    n = max(256, int(math.ceil(GRID_PER_PERIOD * (hi - lo) / per)))
    x = np.linspace(lo, hi, n + 1)
    y = fn(x)
    i = int(np.argmax(y))
    best = float(y[i])
    a, b = x[max(i - 1, 0)], x[min(i + 1, n)]
    if b > a:
        res = minimize_scalar(lambda t: -float(fn(np.array(t))), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


def is_equator(profile: TargetSurfaceProfile, s: float, tol: float = 1e-9) -> bool:
    g0, g1, g2 = profile.derivs(s)[:3]
    return abs(float(g0 * g1)) <= tol and float(g1 * g1 + g0 * g2) < 0 and abs(float(g0)) > tol


def minimizing_criterion(profile: TargetSurfaceProfile, eigenmap: Eigenmap, s_star: float,
                         with_conditions: bool = True) -> CriterionReport:
    """Classify the equator map at ``s_star`` for the eigenmap.

    Local minimality is decided by comparing ``-4 k G'(s_star)`` with
    ``(d-2)^2``; the global upgrade requires the same inequality on the band
    ``|s - s_star| <= S`` with ``S = 2 sqrt(k) |g|_inf / (d-2)``.

    Raises
    ------
    NotAnEquator
        If ``s_star`` is not a local maximum of g².
    """
    if not is_equator(profile, s_star):
        raise NotAnEquator(f"s = {s_star:.12g} is not a local maximum of g^2")
    d, k = eigenmap.d, eigenmap.k
    lhs = -4.0 * k * float(profile.dG(s_star))
    rhs = float((d - 2) ** 2)
    S = 2.0 * math.sqrt(k) * profile.sup_g / (d - 2)
    per = profile.period if profile.period is not None else 2 * math.pi
    band_max = _band_max(lambda s: -4.0 * k * profile.dG(s), s_star - S, s_star + S, per)
    if abs(lhs - rhs) <= CRITERION_TOL:
        verdict = Verdict.INDETERMINATE
    elif lhs > rhs:
        verdict = Verdict.NOT_LOCALLY
    elif band_max <= rhs + CRITERION_TOL:
        verdict = Verdict.GLOBALLY
    else:
        verdict = Verdict.LOCALLY
    c1 = c2 = None
    if with_conditions:
        try:
            c1 = check_condition_C1(profile, s_star)
        except NoFlankingMinima:
            c1 = None
        c2 = check_condition_C2(profile, eigenmap)
    return CriterionReport(float(s_star), d, k, verdict, lhs, rhs, S, band_max,
                           profile.theta, c1, c2)


def flanking_minima(profile: TargetSurfaceProfile, s_star: float) -> tuple[float, float]:
    """Nearest minima of g² (poles or minimal spheres) on both sides of ``s_star``."""
    if profile.period is not None:
        lo, hi = s_star - profile.period, s_star + profile.period
    else:
        lo, hi = profile.domain
    levels = classify_levels(profile, (lo, hi))
    mins = [lev.s for lev in levels.levels if lev.tag != LevelTag.EQUATOR]
    left = [s for s in mins if s < s_star - 1e-12]
    right = [s for s in mins if s > s_star + 1e-12]
    if not left or not right:
        raise NoFlankingMinima(f"equator {s_star:.12g} lacks a neighbouring minimum of g^2")
    return max(left), min(right)


def check_condition_C1(profile: TargetSurfaceProfile, s_star: float, tol: float = 1e-9) -> bool:
    """True iff G'(s_star) is the minimum of G' between the flanking minima."""
    s1, s2 = flanking_minima(profile, s_star)
    per = profile.period if profile.period is not None else 2 * math.pi
    gmin = -_band_max(lambda s: -profile.dG(s), s1, s2, per)
    return bool(float(profile.dG(s_star)) <= gmin + tol)


def check_condition_C2(profile: TargetSurfaceProfile, eigenmap: Eigenmap) -> bool:
    """True iff ``G'(s0) >= (d-1)/k`` at every minimal sphere (vacuous if none)."""
    levels = classify_levels(profile, profile.domain)
    bound = (eigenmap.d - 1) / eigenmap.k
    return all(lev.dG >= bound - CRITERION_TOL for lev in levels.levels
               if lev.tag == LevelTag.MINIMAL_SPHERE)


def criterion_table(profile: TargetSurfaceProfile, dims: Sequence[int], l: int = 1,
                    s_star: float = math.pi / 2) -> list[CriterionReport]:
    """Criterion reports for a range of dimensions at a fixed degree."""
    return [minimizing_criterion(profile, eigenmap_eigenvalue(d, l), s_star, with_conditions=False)
            for d in dims]
