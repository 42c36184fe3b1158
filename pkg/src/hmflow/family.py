"""The one-parameter family of regular profiles leaving a base level.

For fixed base level ``s0`` the regular solutions ``h_a`` are indexed by the
shooting parameter ``a``. This module tabulates the limit map ``L(a)``, the
sup map ``M(a)`` and the number ``I(a)`` of crossings of an equator level,
locates the parameters where ``I`` jumps, and solves ``L(a) = s`` for
prescribed homogeneous initial data.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CriterionNotMet, JumpNotFound, NoBracket, NonMonotoneBracket, TangencySuspected
from .geometry import Eigenmap, TargetSurfaceProfile, Verdict, minimizing_criterion
from .shooting import Equation, ShootSpec, Trajectory, integrate

TANGENCY_FACTOR = 10.0
JUMP_RTOL = 1e-10
DEFAULT_DECADES = (-3.0, 4.0)
DEFAULT_PER_DECADE = 64
A_CAP = 1e12


def safe_dimension(d: int, k: float, theta: float) -> int:
    """Smallest integer ``D >= d`` with ``4 k theta <= (D - 2)^2``."""
    D = int(d)
    if theta > 0:
        D = max(D, int(math.ceil(2.0 + math.sqrt(4.0 * k * theta))))
        while 4.0 * k * theta > (D - 2) ** 2:
            D += 1
        while D - 1 >= d and 4.0 * k * theta <= (D - 3) ** 2:
            D -= 1
    return D


def safe_radius(profile: TargetSurfaceProfile, d: int, k: float) -> tuple[int, float]:
    """Return ``(D, R)`` with ``R = 2 sqrt(D - d)``.

    Beyond ``R`` a profile can cross an equator at most once.
    """
    D = safe_dimension(d, k, profile.theta)
    return D, 2.0 * math.sqrt(D - d)


def limit_map(base: ShootSpec, a: float) -> tuple[float, float]:
    """Tail limit of ``h_a`` and its error bound."""
    traj = integrate(base.with_(a=float(a)))
    return traj.limit, traj.bound


def _tail_crosses(traj: Trajectory, level: float) -> bool:
    if traj.limit is None:
        return False
    end = traj.h[-1] - level
    lim = traj.limit - level
    return end != 0.0 and lim != 0.0 and (end > 0) != (lim > 0)


def crossing_split(traj: Trajectory, level: float, R: float = 0.0) -> tuple[int, int]:
    """Transversal crossings of ``level`` inside and beyond the radius ``R``.

    A crossing hidden in the tail (the limit and the last sample lie on
    different sides of ``level``) counts as an outer crossing.

    Raises
    ------
    TangencySuspected
        If an extremum of h lies within a few integrator tolerances of
        ``level``, so that the side it lies on is not resolved.
    """
    if traj.is_constant:
        return 0, 0
    tol = TANGENCY_FACTOR * (traj.spec.rtol * max(1.0, abs(level)) + traj.spec.atol)
    s = np.sign(traj.dh)
    idx = np.flatnonzero(s[:-1] * s[1:] < 0)
    for i in idx:
        j = i if abs(traj.dh[i]) < abs(traj.dh[i + 1]) else i + 1
        if abs(traj.h[j] - level) < tol:
            raise TangencySuspected(
                f"extremum within {tol:.3g} of level {level:.12g} at r = {traj.r[j]:.6g}")
    rc = traj.crossings(level)
    inner = int(np.count_nonzero(rc <= R))
    outer = int(rc.size - inner) + int(_tail_crosses(traj, level))
    return inner, outer


def intersection_count(traj: Trajectory, s_star: float, R: float = 0.0) -> int:
    """Number of radii where ``h`` crosses ``s_star``.

    Crossings beyond the safe radius ``R`` contribute at most one.
    """
    inner, outer = crossing_split(traj, s_star, R)
    return inner + min(outer, 1)


def geometric_grid(lo: float, hi: float, per_decade: int = DEFAULT_PER_DECADE) -> np.ndarray:
    """Geometric grid on ``[lo, hi]`` with ``per_decade`` points per decade."""
    n = max(2, int(round(per_decade * math.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, n)


@dataclass
class Record:
    a: float
    L: float
    Lbound: float
    M: float
    I: int
    outer: int


@dataclass
class JumpPoint:
    """Refined parameter ``A_n`` where the crossing count leaves ``n``."""

    n: int
    a_lo: float
    a_hi: float
    L: float
    bound: float
    I_lo: int
    I_hi: int
    s_star: float

    @property
    def a(self) -> float:
        return self.a_lo

    @property
    def consistent(self) -> bool:
        """True iff the limit at the jump is within its bound of the equator."""
        return abs(self.L - self.s_star) <= self.bound


@dataclass
class FamilySweep:
    """Tabulated family ``a -> (L, M, I)`` with jump points and safe radius."""

    base: ShootSpec
    s_star: float
    records: list[Record]
    D: int
    theta: float
    R: float
    jumps: list[JumpPoint] = field(default_factory=list)

    @property
    def s0(self) -> float:
        return self.base.s0

    @property
    def a(self) -> np.ndarray:
        return np.array([r.a for r in self.records])

    @property
    def L(self) -> np.ndarray:
        return np.array([r.L for r in self.records])

    @property
    def Lbound(self) -> np.ndarray:
        return np.array([r.Lbound for r in self.records])

    @property
    def M(self) -> np.ndarray:
        return np.array([r.M for r in self.records])

    @property
    def I(self) -> np.ndarray:
        return np.array([r.I for r in self.records], dtype=int)

    def monotone_violations(self) -> np.ndarray:
        """Indices ``i`` where ``L[i+1]`` falls below ``L[i]`` by more than both bounds."""
        L, b = self.L, self.Lbound
        return np.flatnonzero(np.diff(L) < -(b[:-1] + b[1:]))

    def invariant_violations(self) -> list[str]:
        """Human-readable list of broken sweep invariants (empty when all hold)."""
        out = []
        I = self.I
        if I.size and I[0] != 0:
            out.append(f"I = {I[0]} at the smallest a = {self.records[0].a:.6g}")
        for i in np.flatnonzero(np.diff(I) < 0):
            out.append(f"I decreases between a = {self.records[i].a:.6g} and {self.records[i + 1].a:.6g}")
        for rec in self.records:
            if rec.outer > 1:
                out.append(f"{rec.outer} crossings beyond R at a = {rec.a:.6g}")
            if rec.outer >= 1 and abs(rec.L - self.s_star) <= rec.Lbound and I.size:
                out.append(f"outer crossing yet limit within bound of the equator at a = {rec.a:.6g}")
        return out

    def to_csv(self, path) -> None:
        """Write the atlas ``a,L,Lbound,M,I``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "L", "Lbound", "M", "I"])
            for r in self.records:
                w.writerow([repr(r.a), repr(r.L), repr(r.Lbound), repr(r.M), r.I])


def _record(base: ShootSpec, a: float, s_star: float, R: float) -> tuple[Record, Trajectory]:
    traj = integrate(base.with_(a=float(a)))
    inner, outer = crossing_split(traj, s_star, R)
    M = float(max(np.max(traj.h), traj.limit if traj.limit is not None else -np.inf))
    rec = Record(float(a), float(traj.limit), float(traj.bound), M, inner + min(outer, 1), outer)
    return rec, traj


def sweep(base: ShootSpec, s_star: float, a_grid=None, workers: int | None = None) -> FamilySweep:
    """Tabulate the family over ``a_grid``.

    Trajectories are integrated in a thread pool (the compiled kernels
    release the GIL); records are kept in grid order.
    """
    if base.equation != Equation.EXPANDER:
        raise ValueError("family sweeps need the expander equation")
    if a_grid is None:
        a_grid = geometric_grid(10 ** DEFAULT_DECADES[0], 10 ** DEFAULT_DECADES[1])
    a_grid = np.sort(np.asarray(a_grid, dtype=float))
    D, R = safe_radius(base.profile, base.d, base.k)
    workers = workers or os.cpu_count() or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(lambda a: _record(base, a, s_star, R)[0], a_grid))
    else:
        recs = [_record(base, a, s_star, R)[0] for a in a_grid]
    return FamilySweep(base, float(s_star), recs, D, base.profile.theta, R)


def extend_sweep(fs: FamilySweep, hi: float, per_decade: int = DEFAULT_PER_DECADE,
                 workers: int | None = None) -> FamilySweep:
    """Append grid points above the current largest ``a`` up to ``hi``."""
    top = fs.records[-1].a
    if hi <= top:
        return fs
    grid = geometric_grid(top, hi, per_decade)[1:]
    more = sweep(fs.base, fs.s_star, grid, workers)
    return FamilySweep(fs.base, fs.s_star, fs.records + more.records, fs.D, fs.theta, fs.R, fs.jumps)


def _count_at(fs: FamilySweep, a: float) -> tuple[int, Trajectory]:
    rec, traj = _record(fs.base, a, fs.s_star, fs.R)
    return rec.I, traj


def find_jump_points(fs: FamilySweep, n_max: int, rtol: float = JUMP_RTOL) -> list[JumpPoint]:
    """Refine ``A_n = max{a : I(a) = n}`` for ``n = 0 .. n_max``.

    Each bracket ``[a_lo, a_hi]`` with ``I(a_lo) <= n < I(a_hi)`` from the
    sweep is bisected in ``log a`` until its relative width is below ``rtol``
    or until an extremum of h sits on the equator to integrator precision,
    beyond which the count is not resolved.

    Raises
    ------
    JumpNotFound
        If the sweep never exceeds ``n`` crossings.
    """
    a, I = fs.a, fs.I
    jumps = []
    for n in range(n_max + 1):
        above = np.flatnonzero(I > n)
        below = np.flatnonzero(I <= n)
        if above.size == 0 or below.size == 0:
            raise JumpNotFound(f"crossing count never exceeds {n} on the sweep")
        j = int(above[0])
        i = int(below[below < j][-1]) if np.any(below < j) else None
        if i is None:
            raise JumpNotFound(f"no grid point with at most {n} crossings below a = {a[j]:.6g}")
        lo, hi = float(a[i]), float(a[j])
        I_lo, I_hi = int(I[i]), int(I[j])
        while hi - lo > rtol * hi:
            mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * (lo + hi)
            if not lo < mid < hi:
                break
            try:
                c, _ = _count_at(fs, mid)
            except TangencySuspected:
                break
            if c <= n:
                lo, I_lo = mid, c
            else:
                hi, I_hi = mid, c
        _, traj = _count_at(fs, lo)
        jumps.append(JumpPoint(n, lo, hi, float(traj.limit), float(traj.bound), I_lo, I_hi,
                               fs.s_star))
    fs.jumps = jumps
    return jumps


@dataclass
class Member:
    a: float
    crossings: int
    limit_residual: float
    trajectory: Trajectory = field(repr=False)


@dataclass
class ProfileSet:
    """Distinct profiles with the same limit ``s``."""

    s: float
    members: list[Member]
    limit_tol: float = 1e-9

    def distinct(self) -> bool:
        """Pairwise distinct crossing counts, or sup-distance beyond 10 tolerances on ties."""
        for i, m in enumerate(self.members):
            for q in self.members[i + 1:]:
                if m.crossings != q.crossings:
                    continue
                r = np.union1d(m.trajectory.r, q.trajectory.r)
                r = r[(r >= max(m.trajectory.r[0], q.trajectory.r[0]))
                      & (r <= min(m.trajectory.r[-1], q.trajectory.r[-1]))]
                if np.max(np.abs(m.trajectory(r) - q.trajectory(r))) <= 10 * self.limit_tol:
                    return False
        return True

    def as_dict(self) -> dict:
        return {"s": self.s, "profiles": [
            {"a": m.a, "crossings": m.crossings, "limit_residual": m.limit_residual}
            for m in self.members]}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)


def solve_initial_data(base: ShootSpec, s: float, bracket: tuple[float, float],
                       tol: float = 1e-9, s_star: float | None = None,
                       max_iter: int = 200) -> Trajectory:
    """Find the profile with limit ``s`` by bisection on ``a`` inside ``bracket``.

    Parameters
    ----------
    s_star : float or None
        Equator used to detect brackets that straddle a jump of the crossing
        count; defaults to the midpoint between ``s0`` and the profile period.

    Raises
    ------
    NoBracket
        If ``L - s`` has the same sign at both ends.
    NonMonotoneBracket
        If bisection closes in on a jump of the crossing count.
    """
    if s == base.s0:
        return integrate(base.with_(a=0.0))
    lo, hi = sorted(float(x) for x in bracket)
    tlo = integrate(base.with_(a=lo))
    thi = integrate(base.with_(a=hi))
    flo, fhi = tlo.limit - s, thi.limit - s
    if abs(flo) < tol:
        return tlo
    if abs(fhi) < tol:
        return thi
    if (flo > 0) == (fhi > 0):
        raise NoBracket(f"L - s has the same sign at a = {lo:.6g} and a = {hi:.6g}")
    best = tlo if abs(flo) < abs(fhi) else thi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if lo > 0 and hi / lo > 4:
            mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        tm = integrate(base.with_(a=mid))
        fm = tm.limit - s
        if abs(fm) < abs(best.limit - s):
            best = tm
        if abs(fm) < tol:
            break
        if (fm > 0) == (flo > 0):
            lo, flo, tlo = mid, fm, tm
        else:
            hi, fhi, thi = mid, fm, tm
    if abs(best.limit - s) >= tol:
        if s_star is not None:
            _, R = safe_radius(base.profile, base.d, base.k)
            if intersection_count(tlo, s_star, R) != intersection_count(thi, s_star, R):
                raise NonMonotoneBracket(
                    f"bisection for s = {s:.12g} converged onto a jump of the crossing count")
        raise NonMonotoneBracket(f"bisection for s = {s:.12g} stalled at |L - s| = "
                                 f"{abs(best.limit - s):.3g}")
    return best


def _level_sets(fs: FamilySweep) -> dict[int, tuple[float, float]]:
    """Hull of ``{L(a) : I(a) = n}`` on the sweep for every complete count ``n``."""
    I, L = fs.I, fs.L
    top = int(I.max()) if I.size else 0
    hulls = {}
    for n in range(top):
        sel = I == n
        if np.any(sel):
            vals = np.append(L[sel], fs.s_star) if n > 0 or np.any(I > n) else L[sel]
            hulls[n] = (float(vals.min()), float(vals.max()))
    return hulls


def _exemplar_brackets(fs: FamilySweep, s: float, counts: tuple[int, ...]):
    """Brackets with a sign change of ``L - s`` and a constant count in ``counts``.

    Refined jump points join the grid, so levels close to the equator are
    bracketed between the last grid point and the jump.
    """
    pts = [(r.a, r.I, r.L) for r in fs.records]
    for j in fs.jumps:
        pts += [(j.a_lo, j.I_lo, j.L), (j.a_hi, j.I_hi, j.L)]
    pts.sort()
    out = []
    for (a0, i0, l0), (a1, i1, l1) in zip(pts[:-1], pts[1:]):
        if i0 == i1 and i0 in counts and (l0 - s) * (l1 - s) < 0:
            out.append((float(a0), float(a1), int(i0)))
    return out


def multiplicity_window(base: ShootSpec, s_star: float, K: int, fs: FamilySweep | None = None,
                        tol: float = 1e-9, workers: int | None = None
                        ) -> tuple[tuple[float, float], ProfileSet, FamilySweep]:
    """Window ``U_K`` around a non-minimising equator with ``K`` profiles per level.

    ``U_K`` is the intersection over ``n < K`` of the hulls of
    ``S_2n`` and ``S_2n+1``, where ``S_n`` collects the limits of profiles
    with ``n`` crossings. The sweep is extended in ``a`` until the count
    ``2K`` appears. Returns the window, exemplars at a level inside it and
    the sweep used.

    Raises
    ------
    CriterionNotMet
        If ``-4 k G'(s_star) <= (d - 2)^2``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    lhs = -4.0 * base.k * float(base.profile.dG(s_star))
    if lhs <= (base.d - 2) ** 2:
        raise CriterionNotMet(f"equator {s_star:.12g} is locally minimising "
                              f"({lhs:.6g} <= {(base.d - 2) ** 2})")
    if fs is None:
        fs = sweep(base, s_star, workers=workers)
    while fs.I.max() < 2 * K:
        top = fs.records[-1].a
        if top >= A_CAP:
            raise JumpNotFound(f"crossing count {2 * K} not reached below a = {A_CAP:g}")
        fs = extend_sweep(fs, min(top * 100.0, A_CAP), workers=workers)
    find_jump_points(fs, 2 * K - 1)
    hulls = _level_sets(fs)
    lo, hi = -np.inf, np.inf
    for n in range(K):
        a_, b_ = hulls[2 * n], hulls[2 * n + 1]
        lo, hi = max(lo, min(a_[0], b_[0])), min(hi, max(a_[1], b_[1]))
    window = (float(lo), float(hi))
    s = 0.5 * (lo + hi)
    width = hi - lo
    if abs(s - s_star) < 0.1 * width:
        # stay away from the equator itself, where the profiles sit at jumps
        s = s_star - 0.25 * width if s_star - lo > hi - s_star else s_star + 0.25 * width
    members = []
    for n in range(K):
        for a_lo, a_hi, c in _exemplar_brackets(fs, s, (2 * n, 2 * n + 1)):
            traj = solve_initial_data(base, s, (a_lo, a_hi), tol=tol, s_star=s_star)
            members.append(Member(traj.a, intersection_count(traj, s_star, fs.R),
                                  abs(traj.limit - s), traj))
            break
    return window, ProfileSet(float(s), members, base.limit_tol), fs


@dataclass
class AuditReport:
    """Outcome of the uniqueness audit; ``status`` is PASS, FAIL or REFUSED."""

    status: str
    reason: str
    levels: list[float] = field(default_factory=list)
    roots: list[int] = field(default_factory=list)
    witnesses: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def as_dict(self) -> dict:
        return {"status": self.status, "reason": self.reason, "levels": self.levels,
                "roots": self.roots, "witnesses": self.witnesses}


def uniqueness_audit(profile: TargetSurfaceProfile, eigenmap: Eigenmap, s0: float, s_star: float,
                     n_levels: int = 8, seed: int = 0, a_grid=None,
                     workers: int | None = None, **spec_kw) -> AuditReport:
    """Numerical audit of uniqueness for data between ``s0`` and ``s_star``.

    Requires a minimising equator together with conditions (C1) and (C2);
    otherwise the audit is refused. Passes when the sweep never crosses the
    equator, ``L`` increases along the grid and each random level has
    exactly one bracketed root which bisection resolves.
    """
    rep = minimizing_criterion(profile, eigenmap, s_star)
    if rep.verdict not in (Verdict.GLOBALLY, Verdict.LOCALLY) or not rep.c1 or not rep.c2:
        return AuditReport("REFUSED", f"preconditions fail: verdict {rep.verdict.value}, "
                                      f"C1 {rep.c1}, C2 {rep.c2}")
    base = ShootSpec(profile, eigenmap.d, eigenmap.k, s0, 0.0, **spec_kw)
    if a_grid is None:
        a_grid = geometric_grid(1e-3, 1e4, 16)
    fs = sweep(base, s_star, a_grid, workers)
    witnesses = []
    if np.any(fs.I != 0):
        i = int(np.flatnonzero(fs.I != 0)[0])
        witnesses.append(f"crossing of the equator at a = {fs.a[i]:.6g}")
    for i in fs.monotone_violations():
        witnesses.append(f"L decreases between a = {fs.a[i]:.6g} and {fs.a[i + 1]:.6g}")
    sgn = math.copysign(1.0, s_star - s0)
    if np.any(sgn * (fs.L - s_star) >= 0):
        witnesses.append("a limit reaches the equator")
    rng = np.random.default_rng(seed)
    L = fs.L
    lo_s, hi_s = float(min(L[0], L[-1])), float(max(L[0], L[-1]))
    levels = list(rng.uniform(lo_s, hi_s, n_levels))
    roots = []
    for s in levels:
        f = L - s
        br = np.flatnonzero(f[:-1] * f[1:] < 0)
        roots.append(int(br.size))
        if br.size != 1:
            witnesses.append(f"level {s:.12g} has {br.size} bracketed roots")
            continue
        i = int(br[0])
        traj = solve_initial_data(base, s, (fs.a[i], fs.a[i + 1]), s_star=s_star)
        if intersection_count(traj, s_star, fs.R) != 0:
            witnesses.append(f"solution for level {s:.12g} crosses the equator")
    status = "FAIL" if witnesses else "PASS"
    return AuditReport(status, "sweep and root audit", [float(x) for x in levels], roots, witnesses)
