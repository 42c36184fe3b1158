import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmflow.errors import DegenerateCritical, NotAnEquator, SchemaError
from hmflow.geometry import (LevelTag, TargetSurfaceProfile, Verdict, check_condition_C1,
                             check_condition_C2, classify_levels, criterion_table,
                             eigenmap_eigenvalue, minimizing_criterion)

HALF_PI = math.pi / 2


def dumbbell(eps: float, eta: float) -> TargetSurfaceProfile:
    """g = sin s (1 + eps sin^2 s + eta sin^4 s) as a periodic spline."""
    return TargetSurfaceProfile.from_function(
        lambda s: np.sin(s) * (1 + eps * np.sin(s) ** 2 + eta * np.sin(s) ** 4), 2 * math.pi)


@pytest.fixture(scope="module")
def dumbbell_13():
    # minimal sphere at pi/2 with G' = (1 + eps + eta)(-1 - 3 eps - 5 eta) = 1.3
    return dumbbell(0.55, -1.05)


# -- classify_levels ------------------------------------------------------

def test_sphere_levels():
    lv = classify_levels(TargetSurfaceProfile.sphere(), (0.0, math.pi))
    assert lv.tags == ["pole", "equator", "pole"]
    assert [round(x, 12) for x in (lv.levels[0].s, lv.levels[1].s, lv.levels[2].s)] == \
        [0.0, round(HALF_PI, 12), round(math.pi, 12)]
    assert lv.of(LevelTag.MINIMAL_SPHERE) == []


def test_perturbed_sphere_levels():
    prof = TargetSurfaceProfile.perturbed_sphere(0.2)
    lv = classify_levels(prof, (0.0, math.pi))
    assert lv.tags == ["pole", "equator", "pole"]
    # independent oracle: sign changes of G on a fine grid, refined by bisection
    s = np.linspace(0.1, math.pi - 0.1, 100001)
    G = prof.G(s)
    i = np.flatnonzero(np.sign(G[:-1]) != np.sign(G[1:]))
    assert len(i) == 1
    lo, hi = s[i[0]], s[i[0] + 1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if np.sign(prof.G(mid)) == np.sign(prof.G(lo)) else (lo, mid)
    assert abs(lv.of(LevelTag.EQUATOR)[0] - lo) < 1e-10
    assert abs(lo - HALF_PI) < 1e-10


def test_dumbbell_levels(dumbbell_13):
    lv = classify_levels(dumbbell_13, (0.0, math.pi))
    assert lv.tags == ["pole", "equator", "minimal_sphere", "equator", "pole"]
    # oracle: sign of the sampled second derivative of g^2 at each level
    for lev in lv.levels:
        h = 1e-4
        g2 = dumbbell_13.g(np.array([lev.s - h, lev.s, lev.s + h])) ** 2
        curv = g2[0] - 2 * g2[1] + g2[2]
        if lev.tag == LevelTag.EQUATOR:
            assert curv < 0
        else:
            assert curv > 0


def test_degenerate_critical_point():
    # eps = -1/3 merges the two equators into the level pi/2 where G' = 0
    with pytest.raises(DegenerateCritical):
        classify_levels(TargetSurfaceProfile.perturbed_sphere(-1.0 / 3.0), (0.0, math.pi))


@given(st.floats(-0.3, 0.3), st.integers(-3, 3))
@settings(max_examples=15, deadline=None)
def test_levels_invariant_under_period_and_reflection(eps, shift):
    prof = TargetSurfaceProfile.perturbed_sphere(eps)
    base = classify_levels(prof, (-1.0, 4.0))
    moved = classify_levels(prof, (-1.0 + shift * 2 * math.pi, 4.0 + shift * 2 * math.pi))
    assert moved.tags == base.tags
    assert np.allclose([lv.s - shift * 2 * math.pi for lv in moved.levels],
                       [lv.s for lv in base.levels], atol=1e-9)
    # reflection about the pole at 0 maps the window (-1, 4) onto (-4, 1)
    refl = classify_levels(prof, (-4.0, 1.0))
    assert refl.tags == base.tags[::-1]
    assert np.allclose([-lv.s for lv in refl.levels][::-1], [lv.s for lv in base.levels], atol=1e-9)


# -- eigenmaps ------------------------------------------------------------

@pytest.mark.parametrize("d,l,k", [(3, 1, 2), (3, 2, 6), (7, 1, 6)])
def test_eigenmap_examples(d, l, k):
    assert eigenmap_eigenvalue(d, l).k == k


@given(st.integers(3, 40), st.integers(1, 10))
def test_eigenmap_properties(d, l):
    em = eigenmap_eigenvalue(d, l)
    assert em.k == l * (d - 2 + l) and em.k >= d - 1
    assert eigenmap_eigenvalue(d, 1).k == d - 1


def test_eigenmap_rejects_bad_input():
    with pytest.raises(ValueError):
        eigenmap_eigenvalue(2, 1)
    with pytest.raises(ValueError):
        eigenmap_eigenvalue(3, 0)


# -- minimality criterion -------------------------------------------------

def test_criterion_d7_globally():
    rep = minimizing_criterion(TargetSurfaceProfile.sphere(), eigenmap_eigenvalue(7, 1), HALF_PI)
    assert rep.lhs == pytest.approx(24.0, abs=1e-12) and rep.rhs == 25.0
    assert rep.band_max == pytest.approx(24.0, abs=1e-9)
    assert rep.verdict == Verdict.GLOBALLY


@pytest.mark.parametrize("d,lhs,rhs", [(6, 20.0, 16.0), (3, 8.0, 1.0)])
def test_criterion_not_locally(d, lhs, rhs):
    rep = minimizing_criterion(TargetSurfaceProfile.sphere(), eigenmap_eigenvalue(d, 1), HALF_PI)
    assert rep.lhs == pytest.approx(lhs, abs=1e-12) and rep.rhs == rhs
    assert rep.verdict == Verdict.NOT_LOCALLY


def test_criterion_rejects_non_equator():
    with pytest.raises(NotAnEquator):
        minimizing_criterion(TargetSurfaceProfile.sphere(), eigenmap_eigenvalue(3, 1), 1.0)


def test_criterion_locally_but_not_globally(dumbbell_13):
    # equators of the dumbbell are steep; with l = 1 and a large d the local test passes
    eq = classify_levels(dumbbell_13, (0.0, math.pi)).of(LevelTag.EQUATOR)[0]
    reps = [minimizing_criterion(dumbbell_13, eigenmap_eigenvalue(d, 1), eq) for d in range(3, 40)]
    for rep in reps:
        if rep.verdict == Verdict.GLOBALLY:
            assert rep.band_max <= rep.rhs + 1e-10
        if rep.verdict == Verdict.LOCALLY:
            assert rep.lhs < rep.rhs < rep.band_max
        if rep.verdict == Verdict.NOT_LOCALLY:
            assert rep.lhs > rep.rhs


def test_sphere_dichotomy_table():
    reps = criterion_table(TargetSurfaceProfile.sphere(), range(3, 11))
    for rep in reps:
        want = Verdict.GLOBALLY if rep.d >= 7 else Verdict.NOT_LOCALLY
        assert rep.verdict == want
        assert (rep.d ** 2 - 8 * rep.d + 8 > 0) == (rep.d >= 7)


# -- conditions C1 / C2 ---------------------------------------------------

def test_c1_sphere():
    assert check_condition_C1(TargetSurfaceProfile.sphere(), HALF_PI)


def test_c1_perturbed_sphere():
    prof = TargetSurfaceProfile.perturbed_sphere(0.1)
    s = np.linspace(0.0, math.pi, 200001)
    assert prof.dG(HALF_PI) <= prof.dG(s).min() + 1e-9  # grid-min oracle
    assert check_condition_C1(prof, HALF_PI)


def test_c1_fails_when_G_prime_dips(dumbbell_13):
    eq = classify_levels(dumbbell_13, (0.0, math.pi)).of(LevelTag.EQUATOR)[0]
    s = np.linspace(0.0, HALF_PI, 200001)
    assert dumbbell_13.dG(s).min() < dumbbell_13.dG(eq) - 1e-3
    assert not check_condition_C1(dumbbell_13, eq)


def test_c2_examples(dumbbell_13):
    em3 = eigenmap_eigenvalue(3, 1)
    assert check_condition_C2(TargetSurfaceProfile.sphere(), em3)
    ms = classify_levels(dumbbell_13, (0.0, math.pi)).levels[2]
    assert ms.tag == LevelTag.MINIMAL_SPHERE and ms.dG == pytest.approx(1.3, abs=1e-4)
    assert check_condition_C2(dumbbell_13, em3)
    weak = TargetSurfaceProfile.perturbed_sphere(-0.6)  # G' = 0.32 at the minimal sphere
    assert classify_levels(weak, (0.0, math.pi)).levels[2].dG == pytest.approx(0.32, abs=1e-9)
    assert not check_condition_C2(weak, em3)


# -- profile invariants and config ---------------------------------------

@pytest.mark.parametrize("prof", [TargetSurfaceProfile.sphere(),
                                  TargetSurfaceProfile.perturbed_sphere(0.2)])
def test_profile_invariants(prof):
    for p in prof.poles():
        assert abs(abs(float(prof.dg(p))) - 1.0) < 1e-12
        delta = np.linspace(0.01, 1.0, 50)
        assert np.allclose(prof.g(p + delta), -prof.g(p - delta), atol=1e-12)
    assert prof.sup_g == pytest.approx(float(np.max(np.abs(prof.g(prof.sample_grid())))))


def test_spline_matches_builtin():
    sp = TargetSurfaceProfile.from_function(np.sin, 2 * math.pi)
    s = np.linspace(0, 2 * math.pi, 777)
    assert np.max(np.abs(sp.g(s) - np.sin(s))) < 1e-10
    assert np.max(np.abs(sp.dG(s) - np.cos(2 * s))) < 1e-5


def test_spline_validation_rejects_bad_pole():
    x = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    with pytest.raises(ValueError):
        TargetSurfaceProfile.spline(x, 2.0 * np.sin(x), period=2 * math.pi)


def test_from_config():
    assert TargetSurfaceProfile.from_config({"type": "sphere"}).describe() == {"type": "sphere"}
    prof = TargetSurfaceProfile.from_config({"type": "perturbed_sphere", "epsilon": 0.2})
    assert prof.g(np.array([1.0]))[0] == pytest.approx(math.sin(1) * (1 + 0.2 * math.sin(1) ** 2))
    x = np.linspace(0, 2 * math.pi, 128, endpoint=False)
    cfg = {"type": "spline", "knots": x.tolist(), "values": np.sin(x).tolist(),
           "period": 2 * math.pi}
    assert abs(TargetSurfaceProfile.from_config(cfg).g(np.array([0.3]))[0] - math.sin(0.3)) < 1e-6
    with pytest.raises(SchemaError) as exc:
        TargetSurfaceProfile.from_config({"type": "perturbed_sphere"})
    assert exc.value.path == "/manifold/epsilon"
