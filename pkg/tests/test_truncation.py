"""Truncations: rectangular geometry, tail padding, normal equations."""

import math

import numpy as np
import pytest

from specgate import DOUBLE, bigfloat
from specgate.operators import (harmonic_oscillator_operator,
                                hermite_cubic_operator,
                                lattice_longrange_operator)
from specgate.truncation import (TailError, normal_truncation, rectangular,
                                 square, tail_padding)


@pytest.fixture(scope="module")
def cubic():
    return hermite_cubic_operator()


@pytest.fixture(scope="module")
def harmonic():
    return harmonic_oscillator_operator()


@pytest.fixture(scope="module")
def lattice():
    return lattice_longrange_operator()


def test_cubic_shape(cubic):
    T = rectangular(cubic, 0.0, 5, DOUBLE)
    assert T.matrix.shape == (8, 5)
    assert T.k == 3
    assert T.tail_defect == 0.0


def test_harmonic_padded_diag(harmonic):
    T = rectangular(harmonic, 0.0, 3, DOUBLE)
    assert T.matrix.shape == (3, 3)  # bandwidth 0: no padding rows needed
    assert np.allclose(np.diag(T.matrix), [1, 3, 5])


def test_shift_subtracted(cubic):
    z = 2.5 + 0.5j
    T = rectangular(cubic, z, 6, DOUBLE)
    T0 = rectangular(cubic, 0.0, 6, DOUBLE)
    assert np.allclose(np.diag(T.matrix[:6, :6]),
                       np.diag(T0.matrix[:6, :6]) - z)


def test_lattice_padding_and_defect(lattice):
    n = 12
    T = rectangular(lattice, 0.0, n, DOUBLE)
    m = tail_padding(lattice, n, 2.0 ** -n)
    assert T.matrix.shape == (2 * (n + m) + 1, 2 * n + 1)
    assert 0 < T.tail_defect <= 2.0 ** -n * (1 + 1e-9)


def test_tail_padding_slope(lattice):
    # two extra rows of padding per bit of accuracy, plus a log term
    ms = [tail_padding(lattice, n, 2.0 ** -n) for n in (10, 20, 30, 40)]
    slopes = [(ms[i + 1] - ms[i]) / 10.0 for i in range(3)]
    for s in slopes:
        assert 1.5 <= s <= 2.5


def test_tail_padding_trivial_and_halving(lattice):
    assert tail_padding(lattice, 5, 1e9) == 0
    m1 = tail_padding(lattice, 5, 1e-6)
    m2 = tail_padding(lattice, 5, 5e-7)
    assert 0 <= m2 - m1 <= 3


def test_tail_padding_eps_validation(lattice):
    with pytest.raises(ValueError):
        tail_padding(lattice, 5, 0.0)


def test_square_examples(harmonic, cubic):
    S = square(harmonic, 0.0, 2, DOUBLE)
    assert np.allclose(S, np.diag([1.0, 3.0]))
    Sc = np.asarray(square(cubic, 0.0, 40, DOUBLE))
    assert np.allclose(Sc, Sc.T)  # complex symmetric


def test_square_spurious_imaginary(cubic):
    S = np.asarray(square(cubic, 0.0, 60, DOUBLE))
    eigs = np.linalg.eigvals(S)
    window = eigs[(eigs.real >= 0) & (eigs.real <= 40)]
    assert np.max(np.abs(window.imag)) > 0.1


def test_normal_truncation_harmonic(harmonic):
    M = normal_truncation(harmonic, 0.0, 2, 1, DOUBLE)
    assert np.allclose(M, np.diag([1.0, 9.0]))


def test_normal_matches_rectangular(cubic):
    # sqrt(lambda_min of the normal matrix) equals sigma_min of the
    # rectangular truncation; forming H*H squares the conditioning, so the
    # comparison carries an absolute allowance eps*||H*H|| from the dense
    # eigensolve on top of the 1e-10 relative contract
    rng = np.random.default_rng(7)
    for _ in range(6):
        z = complex(rng.uniform(0, 20), rng.uniform(-3, 3))
        N = int(rng.integers(20, 100))
        T = rectangular(cubic, z, N, DOUBLE)
        s = np.linalg.svd(T.matrix, compute_uv=False)[-1]
        M = normal_truncation(cubic, z, N, 3, DOUBLE)
        lam = np.linalg.eigvalsh(M)[0]
        norm_M = np.linalg.norm(np.asarray(M), 2)
        abs_allow = 50.0 * 2.0 ** -53 * norm_M / max(2.0 * s, 1e-30)
        assert math.sqrt(max(lam, 0.0)) == pytest.approx(
            s, rel=1e-10, abs=abs_allow)


def test_normal_exact_kernel(harmonic):
    # shift on a diagonal entry: exact kernel direction once N covers it
    for N in (3, 6, 12):
        M = normal_truncation(harmonic, 5.0, N, 0, DOUBLE)
        lam = np.linalg.eigvalsh(M)[0]
        assert abs(lam) < 1e-12


def test_normal_cutoff_too_small(cubic):
    from specgate.operators import StructureError
    with pytest.raises(StructureError):
        normal_truncation(cubic, 0.0, 5, 2, DOUBLE)


def test_nesting_monotone(cubic):
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = complex(rng.uniform(0, 15), rng.uniform(-4, 4))
        N = int(rng.integers(10, 60))
        TN = rectangular(cubic, z, N, DOUBLE)
        TN1 = rectangular(cubic, z, N + 1, DOUBLE)
        sN = np.linalg.svd(TN.matrix, compute_uv=False)[-1]
        sN1 = np.linalg.svd(TN1.matrix, compute_uv=False)[-1]
        assert sN1 <= sN * (1 + 1e-11) + 1e-14


def test_bigfloat_rectangular_matches_double(cubic):
    T = rectangular(cubic, 1.5, 8, bigfloat(30))
    Td = rectangular(cubic, 1.5, 8, DOUBLE)
    for i in range(11):
        for j in range(8):
            assert abs(complex(T.matrix[i, j]) - Td.matrix[i, j]) < 1e-14
