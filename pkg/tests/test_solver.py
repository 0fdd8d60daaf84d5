"""Solver pipelines: localization, bootstrap, grids, condition numbers."""

import math

import mpmath
import numpy as np
import pytest
from mpmath import mp

from specgate import DOUBLE, bigfloat
from specgate.ltp import cubic_ltp_model, harmonic_ltp_model
from specgate.operators import (harmonic_oscillator_operator,
                                hermite_cubic_operator)
from specgate.sigma import gamma, right_vector
from specgate.solver import (MultiMinimumError, bootstrap_certify,
                             condition_number, evaluate_eigenfunction,
                             locate_minimum, pseudospectrum_grid,
                             square_spectrum_demo, subspace_angle)

from _util import CUBIC_EIGENVALUES, fit_slope, sigma_noise_allowance

LAMBDA_1 = float(mpmath.mpf(CUBIC_EIGENVALUES[0]))
LAMBDA_5 = float(mpmath.mpf(CUBIC_EIGENVALUES[4]))


@pytest.fixture(scope="module")
def cubic():
    return hermite_cubic_operator()


@pytest.fixture(scope="module")
def harmonic():
    return harmonic_oscillator_operator()


# -- locate_minimum ---------------------------------------------------------

def test_locate_minimum_harmonic(harmonic):
    res = locate_minimum(harmonic, (2.0, 4.0), 20, 1e-12, DOUBLE)
    assert res.z_N == pytest.approx(3.0, abs=1e-9)
    assert res.bracket == (2.0, 4.0)
    assert res.iterations > 0
    assert res.gamma_at_min < 1e-9


def test_locate_minimum_cubic_lambda1(cubic):
    res = locate_minimum(cubic, (0.5, 2.6), 200, 1e-10, DOUBLE)
    assert abs(res.z_N - LAMBDA_1) < 1e-8
    assert np.linalg.norm(res.f_N) == pytest.approx(1.0, abs=1e-10)


def test_locate_minimum_multi_dip_error(cubic):
    with pytest.raises(MultiMinimumError) as exc:
        locate_minimum(cubic, (3.0, 9.0), 200, 1e-10, DOUBLE)
    minima = exc.value.minima
    assert any(abs(m - 4.1) < 0.4 for m in minima)
    assert any(abs(m - 7.56) < 0.4 for m in minima)


def test_locate_minimum_argmin_stable(cubic):
    tol = 1e-8
    res = locate_minimum(cubic, (0.5, 2.6), 150, tol, DOUBLE)
    res2 = locate_minimum(cubic, (0.5 + tol / 10, 2.6 - tol / 10), 150, tol,
                          DOUBLE)
    assert abs(res.z_N - res2.z_N) < tol


# -- bootstrap --------------------------------------------------------------

def test_bootstrap_harmonic_oracle(harmonic):
    encs = bootstrap_certify(harmonic, harmonic_ltp_model(), 4, DOUBLE,
                             target_radius=1e-12)
    assert [e.index_n for e in encs] == [1, 2, 3, 4]
    for e, val in zip(encs, (1, 3, 5, 7)):
        assert float(e.radius) <= 1e-12
        assert e.contains(val)
        assert "kappa-bound" in e.conditional_on
    # separation: radii well below half the gap of 2
    for e in encs:
        assert float(e.radius) < 1.0


def test_bootstrap_cubic_double(cubic):
    encs = bootstrap_certify(cubic, cubic_ltp_model(), 3, DOUBLE)
    with mp.workdps(40):
        for e, ref in zip(encs, CUBIC_EIGENVALUES):
            assert float(e.radius) <= 1e-8
            assert e.contains(mpmath.mpf(ref))
            assert e.gap_index_m == e.index_n + 1
    assert encs[0].residual_upper < 1e-8


def test_bootstrap_enclosures_are_ordered(cubic):
    encs = bootstrap_certify(cubic, cubic_ltp_model(), 3, DOUBLE)
    centers = [float(e.center) for e in encs]
    assert centers == sorted(centers)
    for a, b in zip(encs, encs[1:]):
        gap = float(b.center) - float(a.center)
        assert float(a.radius) < gap / 2
        assert float(b.radius) < gap / 2


# -- grids ------------------------------------------------------------------

def test_grid_minimum_near_harmonic_eigenvalue(harmonic):
    g = pseudospectrum_grid(harmonic, (0.0, 4.0, -1.0, 1.0), (17, 9), 20,
                            DOUBLE, parallelism=1)
    iy, ix = np.unravel_index(np.argmin(g.values), g.values.shape)
    res = np.linspace(0, 4, 17)
    assert min(abs(res[ix] - 1.0), abs(res[ix] - 3.0)) < 0.3


def test_grid_shape_and_monotonicity(cubic):
    region = (0.0, 12.0, -4.0, 4.0)
    g150 = pseudospectrum_grid(cubic, region, (9, 7), 150, DOUBLE)
    g300 = pseudospectrum_grid(cubic, region, (9, 7), 300, DOUBLE)
    assert g150.values.shape == (7, 9)
    allow = sigma_noise_allowance(300, 13.0)
    assert np.all(g300.values <= g150.values + allow)


def test_grid_resolution_validation(cubic):
    with pytest.raises(ValueError):
        pseudospectrum_grid(cubic, (0, 1, 0, 1), (1, 5), 20, DOUBLE)


# -- diagnostics ------------------------------------------------------------

def test_subspace_angle_basics():
    u = np.array([1.0, 0.0, 0.0])
    assert subspace_angle(u, u) == pytest.approx(0.0, abs=1e-8)
    v = np.array([0.0, 1.0, 0.0])
    assert subspace_angle(u, v) == pytest.approx(math.pi / 2, abs=1e-12)
    # phase invariance
    assert subspace_angle(u, 1j * u) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        subspace_angle(u, 0 * u)


def test_subspace_angle_converged_eigenvector(cubic):
    f120 = right_vector(cubic, LAMBDA_5, 120, DOUBLE)
    f480 = right_vector(cubic, LAMBDA_5, 480, DOUBLE)
    assert subspace_angle(f120, f480) < 1e-6


def test_evaluate_eigenfunction_basics():
    e0 = [1.0]
    s = evaluate_eigenfunction(e0, [0.0], DOUBLE)
    assert s.values[0] == pytest.approx(math.pi ** -0.25, rel=1e-12)
    e1 = [0.0, 1.0]
    s = evaluate_eigenfunction(e1, [0.0], DOUBLE)
    assert abs(s.values[0]) < 1e-14
    s = evaluate_eigenfunction(e0, [40.0], DOUBLE)
    assert s.underflow[0] and s.values[0] == 0


def test_evaluate_eigenfunction_parseval(cubic):
    v = right_vector(cubic, LAMBDA_1, 60, DOUBLE)
    xs = np.linspace(-12, 12, 3000)
    s = evaluate_eigenfunction(v, xs, DOUBLE)
    mass = np.sum(np.abs(s.values) ** 2) * (xs[1] - xs[0])
    assert mass == pytest.approx(float(np.sum(np.abs(v) ** 2)), rel=0.01)


def test_condition_number_harmonic(harmonic):
    encs = bootstrap_certify(harmonic, harmonic_ltp_model(), 3, DOUBLE,
                             target_radius=1e-10)
    for enc in encs:
        res = condition_number(harmonic, enc, 40, DOUBLE)
        assert res.kappa == pytest.approx(1.0, abs=1e-10)
        assert res.consistency < 1e-8


def test_condition_number_cubic_above_one(cubic):
    encs = bootstrap_certify(cubic, cubic_ltp_model(), 1, DOUBLE)
    res = condition_number(cubic, encs[0], 150, DOUBLE)
    assert res.kappa > 1.0 + 1e-3


def test_square_spectrum_demo(cubic, harmonic):
    rep_h = square_spectrum_demo(harmonic, 12, DOUBLE)
    assert not rep_h.spurious.any()
    rep_c = square_spectrum_demo(cubic, 60, DOUBLE)
    assert rep_c.spurious.any()
    assert rep_c.gammas[rep_c.spurious].max() > 1e-2


def test_residual_decay_slope(cubic):
    Ns = list(range(40, 201, 40))
    logs = []
    for N in Ns:
        res = locate_minimum(cubic, (13.5, 17.3), N, 1e-11, DOUBLE)
        logs.append(math.log10(max(res.gamma_at_min, 1e-300)))
    slope = fit_slope(Ns, logs)
    assert slope < -0.02
