"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see ``conftest.py``).
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from hmflow import energy, evolve, family, geometry, shooting, spectrum
from hmflow.geometry import TargetSurfaceProfile, Verdict
from hmflow.shooting import ShootSpec, integrate

HALF_PI = math.pi / 2


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    assert ok, f"criterion {n}: {detail}"


def test_01_sphere_dichotomy(sphere):
    t0 = time.perf_counter()
    reps = geometry.criterion_table(sphere, range(3, 11))
    elapsed = time.perf_counter() - t0
    want = [Verdict.NOT_LOCALLY] * 4 + [Verdict.GLOBALLY] * 4
    got = [r.verdict for r in reps]
    # integer comparison (d-2)^2 vs 4(d-1)
    exact = [(d - 2) ** 2 > 4 * (d - 1) for d in range(3, 11)]
    ok = got == want and exact == [v == Verdict.GLOBALLY for v in want] and elapsed < 1.0
    record(1, ok, f"verdicts {[v.value for v in got]}, {elapsed:.3f} s")


def test_02_uniqueness_regime(base7):
    t0 = time.perf_counter()
    fs = family.sweep(base7, HALF_PI, np.geomspace(1e-3, 1e4, 256))
    elapsed = time.perf_counter() - t0
    L, B = fs.L, np.array([r.Lbound for r in fs.records])
    ok = (np.all(np.diff(L) > 0) and np.all(L >= 0) and np.all(L < HALF_PI)
          and np.all(fs.I == 0) and np.all(B <= 1e-6) and elapsed < 60)
    record(2, ok, f"L in [{L.min():.3e}, {L.max():.10f}], min step {np.diff(L).min():.2e}, "
                  f"max I {fs.I.max()}, max bound {B.max():.1e}, {elapsed:.1f} s")


def test_03_multiplicity(window3):
    (lo, hi), ps, _ = window3
    counts = [m.crossings for m in ps.members]
    res = [float(np.max(m.trajectory.div_form_residual())) for m in ps.members]
    lim = [m.limit_residual for m in ps.members]
    ok = (lo < ps.s < hi and len(ps.members) == 3 and len(set(counts)) == 3
          and max(res) < 1e-8 and max(lim) < 1e-6)
    record(3, ok, f"U3 = ({lo:.8f}, {hi:.8f}), s = {ps.s:.8f}, crossings {counts}, "
                  f"ODE residual {max(res):.1e}, limit residual {max(lim):.1e}")


def test_04_jump_limits(window3):
    _, _, fs = window3
    jumps = family.find_jump_points(fs, 2)
    gaps = [abs(j.L - HALF_PI) for j in jumps]
    ok = len(jumps) == 3 and all(j.consistent for j in jumps)
    record(4, ok, "; ".join(f"A{j.n} = {j.a:.10g}: |L - pi/2| = {g:.1e} <= {j.bound:.1e}"
                            for j, g in zip(jumps, gaps)))


def _random_trajectories(n: int = 100, seed: int = 7):
    rng = np.random.default_rng(seed)
    profiles = [TargetSurfaceProfile.sphere()] + [TargetSurfaceProfile.perturbed_sphere(e)
                                                  for e in (-0.2, 0.1, 0.3)]
    out = []
    for _ in range(n):
        prof = profiles[rng.integers(len(profiles))]
        d, l = int(rng.integers(3, 10)), int(rng.integers(1, 3))
        a = float(10 ** rng.uniform(-2, 2.5))
        out.append(integrate(ShootSpec(prof, d, l * (d - 2 + l), 0.0, a)))
    return out


@pytest.fixture(scope="module")
def random_trajectories():
    return _random_trajectories()


def test_05_monotone_quantities(random_trajectories):
    tol = random_trajectories[0].spec.rtol
    worst_V = max(shooting.monotone_quantities(t).max_increase_V for t in random_trajectories)
    worst_Vt = max(shooting.monotone_quantities(t).max_increase_Vtilde for t in random_trajectories)
    ok = worst_V <= 10 * tol and worst_Vt <= 10 * tol
    record(5, ok, f"max increment V {worst_V:.1e}, Vtilde {worst_Vt:.1e} (limit {10 * tol:.0e})")


def test_06_derivative_decay(random_trajectories):
    ratios = []
    for t in random_trajectories:
        m = t.r >= 1.0
        ratios.append(float(np.max(t.r[m] ** 3 * np.abs(t.dh[m])) / t.cbar))
    ok = max(ratios) <= 1.0
    record(6, ok, f"max r^3|h'| / C = {max(ratios):.3f} over {len(ratios)} trajectories")


def test_07_closed_form_spectrum(sphere):
    t0 = time.perf_counter()
    details, ok = [], True
    for d, want in ((7, (5.0, 6.0, 7.0)), (3, (3.0, 4.0, 5.0))):
        prob = spectrum.LinearizedProblem.constant(sphere, d, d - 1, 0.0)
        lams = spectrum.eigenvalues(prob, 0.5, want[-1] + 0.5)
        ladder = spectrum.closed_form_spectrum(d, prob.gamma, len(lams))
        hit = [min(abs(x - w) for x in lams) for w in want]
        ok &= max(hit) < 1e-6 and np.allclose(lams, ladder, atol=1e-6)
        details.append(f"d={d}: {[round(x, 9) for x in lams]}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    record(7, ok, "; ".join(details) + f"; {elapsed:.1f} s")


def test_08_translation_mode(base3, base7):
    specs = [base7.with_(a=a) for a in (0.3, 1.0, 5.0)] + [base3.with_(a=a) for a in (1.0, 10.0)]
    rows, ok = [], True
    for spec in specs:
        traj = integrate(spec.with_(r_max=30.0))
        chk = spectrum.translation_mode_check(spectrum.LinearizedProblem.from_trajectory(traj))
        ok &= chk.residual < 1e-6 and chk.zeros == chk.extrema == traj.extrema_count()
        rows.append(f"d={spec.d} a={spec.a:g}: res {chk.residual:.1e}, zeros {chk.zeros}, "
                    f"extrema {chk.extrema}")
    record(8, ok, "; ".join(rows))


def test_09_extrema_law(base3):
    rows, ok = [], True
    for a, want in ((1.0, 0), (10.0, 1), (100.0, 2)):
        traj = integrate(base3.with_(a=a, r_max=30.0))
        n = spectrum.eigenvalue_count_below(spectrum.LinearizedProblem.from_trajectory(traj), 1.0)
        ok &= traj.extrema_count() == want and n == want
        rows.append(f"a={a:g}: extrema {traj.extrema_count()}, eigenvalues below 1: {n}")
    record(9, ok, "; ".join(rows))


def test_10_hardy_constants():
    rows, ok = [], True
    for d in (3, 4, 7):
        res = energy.hardy_rayleigh(d)
        ok &= res.target <= res.best_ratio <= 1.05 * res.target and res.trial_min >= res.target
        rows.append(f"d={d}: best {res.best_ratio:.6f} vs {res.target:g}, "
                    f"trials >= {res.trial_min:.4f}")
    record(10, ok, "; ".join(rows))


def test_11_variational_dichotomy(sphere):
    m3 = energy.minimize_weighted_energy(HALF_PI, 3, 2, sphere)
    m7 = energy.minimize_weighted_energy(HALF_PI, 7, 6, sphere)
    ok = m3.energy < -1e-4 and abs(m7.energy) < 1e-6 and m3.residual < 1e-6
    record(11, ok, f"d=3: E = {m3.energy:.6g}, residual {m3.residual:.1e}; d=7: E = {m7.energy:.1e}")


def test_12_selfsimilar_consistency(base3, base7):
    t0 = time.perf_counter()
    rows, ok = [], True
    for spec in (base7.with_(a=1.0), base3.with_(a=10.0)):
        traj = integrate(spec.with_(r_max=30.0))
        res = evolve.selfsimilar_consistency(traj)
        ok &= res.passed
        rows.append(f"d={spec.d} a={spec.a:g}: error {res.error:.2e} vs estimate {res.estimate:.2e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    record(12, ok, "; ".join(rows) + f"; {elapsed:.1f} s")


def test_13_energy_monotonicity(sphere):
    rng = np.random.default_rng(2024)
    rho = evolve.evolution_grid(12.0)
    bad = []
    worst = 0.0
    for i in range(10):
        d = int(rng.integers(3, 9))
        w0 = evolve.random_admissible(rho, rng, HALF_PI, (0.0, math.pi))
        st = evolve.EvolutionState(evolve.Chart.SELFSIMILAR, rho, w0, 0.0, d,
                                   evolve.Source.full(sphere, d - 1), reference=HALF_PI)
        mon = evolve.energy_monitor(st, 2.0, 0.01)
        worst = max(worst, mon.identity_residual / max(mon.scheme_error, 1e-300))
        if not (mon.monotone and mon.identity_ok):
            bad.append(i)
    record(13, not bad, f"10 runs, failing {bad}, max residual / scheme error {worst:.2e}")


def test_14_linear_stability_and_instability(sphere, base3):
    rows, ok = [], True
    r = evolve.evolution_grid(20.0)
    for d, c in ((3, -0.24), (7, -6.2), (4, 0.5)):
        st = evolve.EvolutionState(evolve.Chart.PHYSICAL, r, r * np.exp(-(r - 1.0) ** 2), 0.0, d,
                                   evolve.Source.linear(c), outer=0.0)
        evolve.evolve(st, 2.0, 0.01)
        inc = float(np.max(np.diff(np.array(st.log)[:, 1])))
        ok &= inc <= 0.0
        rows.append(f"d={d} c={c}: max L2 increment {inc:.1e}")
    # equator perturbation by a slice of the profile through the first jump
    fs = family.sweep(base3, HALF_PI, family.geometric_grid(1e-3, 1e3, 32))
    j = family.find_jump_points(fs, 0)[0]
    traj = integrate(base3.with_(a=0.5 * (j.a_lo + j.a_hi), r_max=40.0))
    f = evolve.expander_slice(traj, 0.02, HALF_PI)
    st = evolve.EvolutionState(evolve.Chart.PHYSICAL, r, f(r), 0.0, 3,
                               evolve.Source.perturbation(sphere, 2, HALF_PI), outer=0.0)
    evolve.evolve(st, 1.0, 0.002)
    log = np.array(st.log)
    growth = log[-1, 1] / log[0, 1]
    ok &= growth >= 10
    rows.append(f"expander slice L2 growth {growth:.2f} over t in [0, 1]")
    record(14, ok, "; ".join(rows))


def test_15_pole_stability(sphere):
    t0 = time.perf_counter()
    rep = evolve.pole_stability_experiment(sphere, 2, 3, 0.0,
                                           lambda r: 0.01 * np.exp(-(r - 2.0) ** 2), horizon=10.0)
    elapsed = time.perf_counter() - t0
    ok = abs(rep.f0_sup - 0.01) < 1e-6 and rep.sup_over_time < 0.05 and elapsed < 120
    record(15, ok, f"sup |f| = {rep.sup_over_time:.7f} for |f0| = {rep.f0_sup:.7f}, {elapsed:.1f} s")
