"""Verified residuals, certification, enclosure serialization."""

import json
import math

import mpmath
import numpy as np
import pytest
from mpmath import mp

from specgate import DOUBLE, bigfloat
from specgate.ltp import (GapMembershipError, cubic_ltp_model,
                          harmonic_ltp_model, kappa_bound)
from specgate.operators import (harmonic_oscillator_operator,
                                hermite_cubic_operator,
                                lattice_longrange_operator)
from specgate.sigma import right_vector, sigma_min
from specgate.verify import (CertificationError, Enclosure,
                             certify_eigenvalue, eigenvector_error_bound,
                             enclosures_to_report, verified_residual)

from _util import CUBIC_EIGENVALUES

LAMBDA_1 = CUBIC_EIGENVALUES[0]


@pytest.fixture(scope="module")
def cubic():
    return hermite_cubic_operator()


@pytest.fixture(scope="module")
def harmonic():
    return harmonic_oscillator_operator()


def test_exact_eigenpair_residual(harmonic):
    v = np.zeros(8, dtype=complex)
    v[0] = 1.0
    b = verified_residual(harmonic, 1.0, v, DOUBLE)
    assert b.hi <= 1e-15
    assert b.lo >= 0.0


def test_residual_upper_bounds_lower(cubic):
    v = right_vector(cubic, 4.0, 40, DOUBLE)
    b = verified_residual(cubic, 4.0, v, DOUBLE)
    assert 0 <= b.lo <= b.hi


def test_cubic_candidate_residual_double(cubic):
    z = float(mpmath.mpf(LAMBDA_1))
    v = right_vector(cubic, z, 200, DOUBLE)
    b = verified_residual(cubic, z, v, DOUBLE)
    assert b.hi < 1e-10


def test_residual_scaling_invariance(cubic):
    z = 2.0
    v = right_vector(cubic, z, 30, DOUBLE)
    b1 = verified_residual(cubic, z, v, DOUBLE)
    b7 = verified_residual(cubic, z, 7.0 * np.asarray(v), DOUBLE)
    assert b7.hi <= b1.hi * (1 + 1e-12) + 1e-300
    assert b7.lo >= b1.lo * (1 - 1e-12)


def test_residual_zero_vector_rejected(cubic):
    with pytest.raises(ValueError):
        verified_residual(cubic, 1.0, np.zeros(5, dtype=complex), DOUBLE)


def test_residual_rotated_vs_box_paths_agree(cubic):
    # the fast real-rotated path and the generic box path enclose the same
    # quantity; a complex shift forces the box path
    z = 3.0
    v = right_vector(cubic, z, 30, DOUBLE)
    fast = verified_residual(cubic, z, v, DOUBLE)
    boxy = verified_residual(cubic, complex(z, 0.0), v, bigfloat(25))
    assert abs(float(fast.hi) - float(boxy.hi)) < 1e-12 * max(1.0, float(fast.hi))


def test_residual_mp_matches_sigma(cubic):
    ctx = bigfloat(40)
    with mp.workdps(45):
        z = mpmath.mpf(LAMBDA_1)
        sig, v = sigma_min(cubic, z, 150, ctx, want_vector=True)
        b = verified_residual(cubic, z, v, ctx)
        assert float(b.hi) >= float(sig) * (1 - 1e-10)
        assert float(b.hi) <= float(sig) * (1 + 1e-6) + 1e-30


def test_certify_lambda1_double(cubic):
    z = float(mpmath.mpf(LAMBDA_1))
    v = right_vector(cubic, z, 200, DOUBLE)
    enc = certify_eigenvalue(cubic, cubic_ltp_model(), z, v, 2, DOUBLE,
                             index_n=1)
    assert float(enc.radius) <= 1e-9
    with mp.workdps(40):
        assert enc.contains(mpmath.mpf(LAMBDA_1))
    assert "kappa-bound" in enc.conditional_on
    assert enc.gap_index_m == 2


def test_certify_fails_closed_on_large_residual(cubic):
    # a junk vector has a large residual; with a huge strip constant the
    # inversion formula has no finite value and certification must refuse
    v = np.zeros(30, dtype=complex)
    v[7] = 1.0
    with pytest.raises(CertificationError):
        certify_eigenvalue(cubic, cubic_ltp_model(), 4.1, v, 5, DOUBLE,
                           index_n=4)


def test_certify_gap_membership_error(cubic):
    v = np.zeros(10, dtype=complex)
    v[0] = 1.0
    with pytest.raises(GapMembershipError):
        certify_eigenvalue(cubic, cubic_ltp_model(), 100.0, v, 1, DOUBLE)


def test_enclosure_json_roundtrip_and_schema(cubic):
    z = float(mpmath.mpf(LAMBDA_1))
    v = right_vector(cubic, z, 200, DOUBLE)
    enc = certify_eigenvalue(cubic, cubic_ltp_model(), z, v, 2, bigfloat(30),
                             index_n=1)
    blob = enc.to_json()
    back = Enclosure.from_json(blob)
    assert back.index_n == enc.index_n
    assert float(back.radius) == pytest.approx(float(enc.radius), rel=1e-2)
    with mp.workdps(40):
        assert abs(mpmath.mpf(back.center) - mpmath.mpf(enc.center)) \
            <= 10 ** (-enc._sig_digits() + 3)

    import jsonschema
    from importlib.resources import files
    schema = json.loads(files("specgate").joinpath(
        "schemas/enclosure.schema.json").read_text())
    report = enclosures_to_report([enc], "cubic", "bigfloat:30",
                                  timestamp="2026-01-01T00:00:00Z")
    jsonschema.validate(report, schema)


def test_enclosure_decimal_digit_rule():
    enc = Enclosure("cubic", 1, 1.23456789, 1e-6, 1e-8, 2, 16, ("kappa-bound",))
    out = enc.to_json()
    # ceil(-log10 r) + 2 = 8 significant digits
    digits = out["center"].replace(".", "").replace("-", "").lstrip("0")
    assert len(digits) == 8


def test_eigenvector_error_bound_monotone(cubic):
    lam = [float(mpmath.mpf(s)) for s in CUBIC_EIGENVALUES[:3]]
    encs = [Enclosure("cubic", i + 1, lam[i], 1e-12, 1e-13, i + 2, 30,
                      ("kappa-bound",)) for i in range(3)]
    b1 = eigenvector_error_bound(encs[1], 1e-12, (encs[0], encs[2]))
    b2 = eigenvector_error_bound(encs[1], 1e-10, (encs[0], encs[2]))
    assert 0 < float(b1) < float(b2)


def test_eigenvector_error_bound_zero_residual(cubic):
    lam = [float(mpmath.mpf(s)) for s in CUBIC_EIGENVALUES[:3]]
    encs = [Enclosure("cubic", i + 1, lam[i], 0.0, 0.0, i + 2, 30,
                      ("kappa-bound",)) for i in range(3)]
    b = eigenvector_error_bound(encs[1], 0.0, (encs[0], encs[2]))
    assert float(b) == 0.0


def test_eigenvector_error_bound_overlap_error(cubic):
    lam1 = float(mpmath.mpf(CUBIC_EIGENVALUES[0]))
    a = Enclosure("cubic", 1, lam1, 1e-12, 1e-13, 2, 30, ())
    b = Enclosure("cubic", 2, lam1 + 1e-13, 1.0, 1e-13, 3, 30, ())
    with pytest.raises(ValueError):
        eigenvector_error_bound(a, 1e-12, (None, b))


def test_eigenvector_error_bound_shrinks_with_N(cubic):
    # residuals fall exponentially with N, and the bound follows linearly
    lam = [float(mpmath.mpf(s)) for s in CUBIC_EIGENVALUES[3:6]]
    encs = [Enclosure("cubic", i + 4, lam[i], 1e-13, 1e-14, i + 5, 30,
                      ("kappa-bound",)) for i in range(3)]
    z = lam[1]
    out = []
    for N in (120, 240):
        v = right_vector(cubic, z, N, DOUBLE)
        eps = verified_residual(cubic, z, v, bigfloat(30)).hi
        out.append(float(eigenvector_error_bound(encs[1], eps,
                                                 (encs[0], encs[2]))))
    assert out[1] * 10.0 <= out[0]


def test_longrange_residual_includes_tail():
    lattice = lattice_longrange_operator()
    n = 10
    v = right_vector(lattice, -0.04918293439, n, DOUBLE)
    b0 = verified_residual(lattice, -0.04918293439, v, bigfloat(25),
                           col_start=-n, pad=20)
    b1 = verified_residual(lattice, -0.04918293439, v, bigfloat(25),
                           col_start=-n, pad=60)
    # small padding leaves a visible tail term; large padding removes it
    assert float(b0.hi) > float(b1.hi)
    assert float(b0.hi) >= lattice.tail_bound(n, 20)
