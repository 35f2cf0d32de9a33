import math

import mpmath as mp
import numpy as np
import pytest
from scipy.special import jv, jvp, yv, yvp

from scatmono import (
    ConvergenceError,
    DomainError,
    MeshSpec,
    ScatterPoint,
    bessel_order,
    compare_wkb,
    reduce_mod_pi,
    solve_radial,
    wkb_phase_shift,
)
from scatmono.quantum import _unwrap_to

from .conftest import HBAR, P_BELOW


def phase_gap(a, b):
    return abs(reduce_mod_pi(a - b))


@pytest.mark.parametrize("nu", [0.0, 4.0, math.sqrt(16 + 640), math.sqrt(144 + 640)])
@pytest.mark.parametrize("x", [2.5, 20.0, 120.0, 700.0])
def test_cylinder_functions_against_mpmath(nu, x):
    with mp.workdps(30):
        ref = [mp.besselj(nu, x), mp.bessely(nu, x), mp.besselj(nu, x, 1), mp.bessely(nu, x, 1)]
    got = [jv(nu, x), yv(nu, x), jvp(nu, x), yvp(nu, x)]
    for g, r in zip(got, ref):
        r = float(r)
        assert g == pytest.approx(r, rel=1e-8, abs=1e-8 * max(1.0, abs(r)) if abs(r) < 1 else 0.0)


def test_bessel_order(pot):
    assert bessel_order(pot, 3, HBAR) == pytest.approx(math.sqrt(9 + 2 * 20 / HBAR**2))


@pytest.mark.parametrize("m, k", [(0, 3.0), (2, 10.0), (-5, 30.0)])
def test_zero_potential(free, m, k):
    assert abs(solve_radial(free, m, k, HBAR).delta_exact) < 1e-8


@pytest.mark.parametrize("m, k", [(4, P_BELOW / HBAR), (0, 12.0), (7, 30.0)])
def test_step_halving_stable(pot, m, k):
    a = solve_radial(pot, m, k, HBAR).delta_exact
    b = solve_radial(pot, m, k, HBAR, MeshSpec(step=0.025)).delta_exact
    assert phase_gap(a, b) < 1e-7


@pytest.mark.parametrize("m, k", [(4, P_BELOW / HBAR), (1, 20.0)])
def test_matching_radius_stable(pot, m, k):
    a = solve_radial(pot, m, k, HBAR, MeshSpec(r_match=20.0)).delta_exact
    b = solve_radial(pot, m, k, HBAR, MeshSpec(r_match=40.0)).delta_exact
    assert phase_gap(a, b) < 1e-7


def test_plus_minus_m_identical(pot):
    a = solve_radial(pot, 3, 15.0, HBAR).delta_exact
    b = solve_radial(pot, -3, 15.0, HBAR).delta_exact
    assert a == b


def test_regular_solution_satisfies_equation(pot):
    sol = solve_radial(pot, 4, P_BELOW / HBAR, HBAR)
    assert sol.residual(pot) < 1e-6
    # regular behaviour at the origin
    r, u = sol.grid[:5], sol.u[:5]
    slope = np.diff(np.log(np.abs(u))) / np.diff(np.log(r))
    assert np.allclose(slope, 4.5, rtol=1e-3)


def test_reference_point_within_one_percent(pot):
    # m = 4, p = sqrt(6): exact against the continuous WKB phase
    k = P_BELOW / HBAR
    wkb = wkb_phase_shift(pot, ScatterPoint(4 * HBAR, P_BELOW), HBAR)
    exact = _unwrap_to(solve_radial(pot, 4, k, HBAR).delta_exact, wkb)
    assert abs(exact - wkb) / abs(exact) < 0.01


def test_phase_vanishes_at_large_k(pot):
    # high-energy limit of dW / 2 hbar for a / (1 + r^2): -pi a mu / (2 hbar^2 k)
    limit = -math.pi * 20.0 / (2 * HBAR**2)
    prev = math.inf
    for k in (100.0, 200.0, 400.0):
        wkb = wkb_phase_shift(pot, ScatterPoint(2 * HBAR, k * HBAR), HBAR)
        exact = _unwrap_to(solve_radial(pot, 2, k, HBAR).delta_exact, wkb)
        assert abs(exact) < prev
        prev = abs(exact)
    assert k * exact == pytest.approx(limit, rel=1e-2)


def test_error_decreases_with_k(pot):
    rows = compare_wkb(pot, [3], [20.0, 40.0, 80.0], HBAR)
    errs = [r.abs_err for r in rows]
    assert errs[0] > errs[1] > errs[2]


def test_compare_symmetric_in_m(pot):
    a, b = compare_wkb(pot, [-6, 6], [18.0], HBAR)
    assert a.as_tuple()[1:] == b.as_tuple()[1:]


def test_compare_rejects_singular_point(pot):
    with pytest.raises(DomainError):
        compare_wkb(pot, [0], [pot.p_c / HBAR], HBAR)


@pytest.mark.parametrize("args", [(2, 0.0, HBAR), (2, 5.0, 0.0), (2.5, 5.0, HBAR)])
def test_invalid_inputs(pot, args):
    with pytest.raises(DomainError):
        solve_radial(pot, *args)


def test_unconverged_raises(pot):
    with pytest.raises(ConvergenceError):
        solve_radial(pot, 3, 15.0, HBAR, MeshSpec(step=2.0, tol=1e-14, max_halvings=2))
