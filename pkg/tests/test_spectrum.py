import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmflow.errors import DegenerateMode
from hmflow.geometry import TargetSurfaceProfile
from hmflow.shooting import Equation, ShootSpec, integrate
from hmflow.spectrum import (LinearizedProblem, closed_form_spectrum, count_zeros, decay_exponent,
                             eigenpair, eigenvalue_count_below, eigenvalues, find_eigenvalues,
                             solve_EF, spectral_report, translation_mode_check,
                             weighted_poincare_ratio)

SPHERE = TargetSurfaceProfile.sphere()


def problem(d, a, **kw):
    return LinearizedProblem.from_trajectory(
        integrate(ShootSpec(SPHERE, d, d - 1, 0.0, a, r_max=30.0, **kw)))


@pytest.fixture(scope="module")
def const3():
    return LinearizedProblem.constant(SPHERE, 3, 2, 0.0)


@pytest.fixture(scope="module")
def const7():
    return LinearizedProblem.constant(SPHERE, 7, 6, 0.0)


# -- origin exponents -----------------------------------------------------

@given(st.integers(3, 12), st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_origin_exponents(d, l):
    p = LinearizedProblem.constant(SPHERE, d, l * (d - 2 + l), 0.0)
    g1, g2 = p.origin_exponents()
    assert g1 < 0 < g2
    assert abs(g1 + g2 + (d - 2)) < 1e-12
    assert abs(g1 * g2 + p.k * p.dG0) < 1e-12 * (1 + p.k)
    assert g2 == p.gamma


def test_rejects_harmonic_equation():
    with pytest.raises(ValueError):
        LinearizedProblem(ShootSpec(SPHERE, 3, 2, 0.0, 1.0, equation=Equation.HARMONIC))


# -- constant profile: closed-form spectrum -------------------------------

def test_ground_state_zero_count(const3):
    lam0 = closed_form_spectrum(3, const3.gamma, 1)[0]
    assert lam0 == 2.0
    assert count_zeros(solve_EF(const3, lam0 - 0.1)) == 0
    assert count_zeros(solve_EF(const3, lam0 + 0.1)) == 1
    assert count_zeros(solve_EF(const3, lam0 + 1.1)) == 2


def test_ground_state_eigenfunction(const7):
    # w = rho^gamma exp(-rho^2/4) at lambda = d/2 + gamma/2
    sol = eigenpair(const7, (3.9, 4.1))
    rho = np.linspace(0.1, 3.0, 50)
    w = rho * np.exp(-rho ** 2 / 4)
    v = sol(rho)
    assert np.max(np.abs(v / v[0] - w / w[0])) < 1e-6


@pytest.mark.parametrize("d", [3, 5, 7])
def test_closed_form_ladder(d):
    p = LinearizedProblem.constant(SPHERE, d, d - 1, 0.0)
    want = closed_form_spectrum(d, p.gamma, 4)
    got = eigenvalues(p, 0.5, want[-1] + 0.5)
    assert np.allclose(got, want, atol=1e-6)


def test_count_below_far_negative(const3):
    assert eigenvalue_count_below(const3, -50.0) == 0


def test_counting_function_unit_jumps(const3):
    E = np.linspace(-1.0, 5.5, 53)
    N = [eigenvalue_count_below(const3, e) for e in E]
    assert np.all(np.diff(N) >= 0) and np.all(np.diff(N) <= 1)
    assert N[-1] == 4  # 2, 3, 4, 5


def test_find_eigenvalues_validates_window(const3):
    with pytest.raises(ValueError):
        find_eigenvalues(const3, 2.0, 1.0)
    for lo, hi in find_eigenvalues(const3, 0.5, 4.5):
        assert hi - lo < 1e-8


# -- non-constant profiles ------------------------------------------------

@pytest.mark.parametrize("a", [0.3, 3.0, 30.0])
def test_monotone_profile_spectrum_above_one(a):
    p = problem(7, a)
    assert eigenvalue_count_below(p, 1.0) == 0
    assert eigenvalues(p, None, 2.0) == [] or min(eigenvalues(p, None, 2.0)) >= 1.0


def test_rayleigh_quotient_matches_eigenvalue():
    from hmflow.spectrum import rayleigh_quotient

    p = problem(3, 10.0)
    (lo, hi), = find_eigenvalues(p, None, 1.0)
    sol = eigenpair(p, (lo, hi))
    assert abs(rayleigh_quotient(sol) - 0.5 * (lo + hi)) < 1e-6


@pytest.mark.parametrize("lam", [2.0, 3.0, 4.0])
def test_rayleigh_quotient_excited_states(const3, lam):
    from hmflow.spectrum import rayleigh_quotient

    sol = eigenpair(const3, (lam - 0.3, lam + 0.3))
    assert abs(rayleigh_quotient(sol) - lam) < 1e-6


def test_translation_mode_degenerate_for_constant(const3):
    with pytest.raises(DegenerateMode):
        translation_mode_check(const3)


def test_translation_mode_d3():
    chk = translation_mode_check(problem(3, 100.0))
    assert chk.residual < 1e-6 and chk.zeros == chk.extrema == 2


def test_decay_exponent_monotone_profile():
    rep = decay_exponent(problem(3, 0.5))
    assert rep.n_below_one == 0 and rep.bound_exponent == pytest.approx(-0.5)


def test_decay_exponent_with_one_unstable_mode():
    rep = decay_exponent(problem(4, 3.0))
    assert rep.n_below_one == 1 and rep.bound_exponent is None
    lam = rep.eigenvalues_below_one[0]
    assert lam < 1.0
    assert rep.exponents[0] == pytest.approx(1.0 - lam, abs=1e-12) and rep.exponents[0] > 0


def test_decay_exponent_two_modes():
    rep = decay_exponent(problem(4, 30.0))
    assert rep.n_below_one == 2 and len(rep.exponents) == 2


def test_form_lower_bound(const7, const3):
    assert const7.form_lower_bound() == 0.0  # Hardy term dominates in d = 7
    assert const3.form_lower_bound() <= 0.0


def test_spectral_report(tmp_path):
    rep = spectral_report(problem(3, 10.0))
    assert rep.zero_count == rep.eigenvalue_count == 1
    rep.to_json(tmp_path / "spec.json")
    assert (tmp_path / "spec.json").read_text().startswith("{")


# -- weighted Poincare inequality -----------------------------------------

@given(st.integers(3, 9), st.floats(0.3, 4.0), st.floats(0.2, 2.0), st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_weighted_poincare(d, c, width, m):
    rho = np.linspace(0.0, 12.0, 6001)
    bump = np.exp(-((rho - c) / width) ** 2) * rho ** m
    w = bump * np.exp(-rho ** 2 / 4)
    dw = np.gradient(w, rho, edge_order=2)
    assert weighted_poincare_ratio(rho, w, dw, d) <= 16.0
