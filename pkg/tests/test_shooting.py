import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmflow.errors import NonMinimalBase, SeriesDivergence, Unbounded
from hmflow.geometry import TargetSurfaceProfile
from hmflow.shooting import (Equation, ShootSpec, Trajectory, energy_space_check,
                             estimate_tail_limit, integrate, local_exponent, monotone_quantities,
                             series_seed)

HALF_PI = math.pi / 2
SPHERE = TargetSurfaceProfile.sphere()


def spec(d, a, l=1, **kw):
    return ShootSpec(SPHERE, d, l * (d - 2 + l), 0.0, a, **kw)


# -- local_exponent -------------------------------------------------------

@pytest.mark.parametrize("d", range(3, 12))
def test_exponent_corotational_is_one(d):
    assert local_exponent(d, d - 1, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_exponent_degree_two():
    assert local_exponent(3, 6, 1.0) == pytest.approx(2.0, abs=1e-15)


def test_exponent_rejects_non_minimal_base():
    with pytest.raises(NonMinimalBase):
        local_exponent(3, 2, 0.0)


@given(st.integers(3, 30), st.floats(0.1, 100.0), st.floats(0.01, 5.0))
def test_exponent_solves_indicial_equation(d, k, dG):
    g = local_exponent(d, k, dG)
    assert g > 0
    assert abs(g * g + (d - 2) * g - k * dG) <= 1e-10 * (1 + k * dG)


# -- series_seed ----------------------------------------------------------

def test_seed_constant():
    s = series_seed(spec(3, 0.0))
    assert (s.h, s.dh) == (0.0, 0.0)


def test_seed_leading_order():
    s = series_seed(spec(3, 1.0, r0=1e-6))
    assert s.h == pytest.approx(1e-6, rel=1e-9)
    assert s.dh == pytest.approx(1.0, rel=1e-9)


def test_seed_divergence_guard():
    with pytest.raises(SeriesDivergence):
        series_seed(spec(3, 1e3, r0=0.5))


def test_seed_automatic_radius_is_accurate():
    s = series_seed(spec(7, 1e3))
    assert s.correction <= 1e-5


# -- integrate ------------------------------------------------------------

def test_integrate_constant():
    t = integrate(spec(3, 0.0))
    assert np.all(t.h == 0.0) and np.all(t.dh == 0.0)
    assert estimate_tail_limit(t) == (0.0, 0.0)


def test_d7_profile_monotone_below_equator():
    t = integrate(spec(7, 1.0))
    assert np.all(t.dh > 0)
    assert t.limit < HALF_PI and np.all(t.h < HALF_PI)


def test_d3_large_a_crosses_twice():
    t = integrate(spec(3, 300.0))
    assert len(t.crossings(HALF_PI)) >= 2


def test_residual_of_divergence_form():
    for d, a in ((3, 10.0), (7, 1.0), (5, 50.0)):
        assert np.max(integrate(spec(d, a)).div_form_residual()) < 1e-9


def test_tail_bound_d7():
    t = integrate(spec(7, 1.0))
    L, bound = estimate_tail_limit(t)
    assert t.cbar >= 6.0  # at least k |g|_inf^2 with F(1) <= 6
    assert t.certified_bound <= t.cbar / 800.0
    assert bound <= t.certified_bound


def test_tail_limit_self_consistent():
    t10 = integrate(spec(7, 1.0, r_max=10.0))
    t20 = integrate(spec(7, 1.0, r_max=20.0))
    assert abs(t10.limit - t20.limit) < t20.cbar / 200.0
    assert abs(t10.limit - t20.limit) < 1e-9


def test_unbounded_trajectory_has_no_limit():
    t = integrate(spec(3, 1.0))
    t.bounded = False
    with pytest.raises(Unbounded):
        estimate_tail_limit(t)


# -- monotone quantities --------------------------------------------------

def test_monotone_quantities_constant():
    m = monotone_quantities(integrate(spec(3, 0.0)))
    assert np.all(m.V == 0.0) and np.all(m.Vtilde == 0.0)
    assert m.max_increase_V == 0.0 and m.max_increase_Vtilde == 0.0


def test_V_vanishes_at_pole_seed():
    t = integrate(spec(3, 1.0))
    assert abs(monotone_quantities(t).V[0]) < 1e-5


@given(st.integers(3, 9), st.integers(1, 2), st.floats(-2.0, 2.5),
       st.sampled_from([0.0, -0.2, 0.3]))
@settings(max_examples=25, deadline=None)
def test_monotone_quantities_property(d, l, loga, eps):
    prof = TargetSurfaceProfile.perturbed_sphere(eps)
    t = integrate(ShootSpec(prof, d, l * (d - 2 + l), 0.0, 10.0 ** loga))
    m = monotone_quantities(t)
    assert m.max_increase_V <= 10 * t.spec.rtol
    assert m.max_increase_Vtilde <= 10 * t.spec.rtol
    r = t.r >= 1.0
    assert np.all(t.r[r] ** 3 * np.abs(t.dh[r]) <= t.cbar)


# -- energy space ---------------------------------------------------------

def test_energy_space_members():
    assert energy_space_check(integrate(spec(3, 0.0)))
    for d, a in ((3, 1.0), (3, 100.0), (7, 5.0)):
        assert energy_space_check(integrate(spec(d, a)))


def test_energy_space_rejects_singular_field():
    d = 5
    sp = spec(d, 1.0)
    r = np.geomspace(1e-8, 1.0, 400)
    beta = (d - 2) / 2.0
    h = r ** -beta
    fake = Trajectory(sp, r, h, -beta * r ** (-beta - 1), beta * (beta + 1) * r ** (-beta - 2),
                      1.0, r[0])
    assert not energy_space_check(fake)


# -- comparison, rescaling and oscillation -------------------------------

@given(st.floats(-3.0, 3.5), st.floats(0.01, 1.0))
@settings(max_examples=15, deadline=None)
def test_non_crossing_in_uniqueness_regime(loga, gap):
    a = 10.0 ** loga
    t1, t2 = integrate(spec(7, a)), integrate(spec(7, a * (1 + gap)))
    r = t1.r[(t1.r >= max(t1.r[0], t2.r[0])) & (t1.r <= min(t1.r[-1], t2.r[-1]))]
    assert np.all(t1(r) < t2(r))
    assert t1.limit < t2.limit


def test_no_interior_maximum_while_G_positive():
    for a in (0.1, 1.0, 10.0):
        t = integrate(spec(3, a))
        band = t.h < HALF_PI
        # first exit from the band where G > 0
        stop = np.argmin(band) if not band.all() else len(band)
        dh = t.dh[:stop]
        assert np.all(dh > 0)


def test_rescaled_profiles_converge_to_harmonic_map():
    bar = integrate(spec(3, 1.0, equation=Equation.HARMONIC, r_max=50.0))
    x = np.linspace(0.0, 2.0, 401)
    dist = []
    for a in (10.0, 100.0, 1000.0):
        t = integrate(spec(3, a))
        dist.append(float(np.max(np.abs(t(a ** (-1 / t.gamma) * x) - bar(x)))))
    assert dist[0] > dist[1] > dist[2]


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_harmonic_map_oscillates_below_seven(d):
    t = integrate(spec(d, 100.0, equation=Equation.HARMONIC, r_max=1000.0))
    assert len(t.crossings(HALF_PI)) >= 3


def test_harmonic_map_monotone_in_seven():
    t = integrate(spec(7, 100.0, equation=Equation.HARMONIC, r_max=1000.0))
    assert len(t.crossings(HALF_PI)) == 0 and np.all(t.h < HALF_PI)


@pytest.mark.parametrize("d", [3, 4, 7])
def test_harmonic_Vtilde_stays_nonpositive(d):
    # starts at 0 from below (gamma^2 < k) and cannot increase
    t = integrate(spec(d, 1.0, equation=Equation.HARMONIC, r_max=50.0))
    Vt = t.Vtilde()
    assert np.all(Vt <= 1e-10 * np.max(np.abs(Vt)))


def test_csv_export(tmp_path):
    t = integrate(spec(3, 1.0))
    t.to_csv(tmp_path / "traj.csv")
    head = (tmp_path / "traj.csv").read_text().splitlines()[0]
    assert head == "r,h,dh,V,Vtilde"
    assert (tmp_path / "traj.json").exists()
