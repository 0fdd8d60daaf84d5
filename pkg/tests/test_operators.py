"""Operator specs: band structure, symmetry, the quadrature oracle, plugins."""

import math

import mpmath
import numpy as np
import pytest
from numpy.polynomial.hermite import hermgauss

from specgate import DOUBLE, bigfloat
from specgate.intervals import MPIntervalScope
from specgate.operators import (BOX_DOUBLE_LIB, BOX_MP_LIB, ExpressionError,
                                StructureError, apply_column,
                                harmonic_oscillator_operator,
                                hermite_cubic_operator,
                                lattice_longrange_operator,
                                load_plugin_operator, parse_expression)


@pytest.fixture(scope="module")
def cubic():
    return hermite_cubic_operator()


@pytest.fixture(scope="module")
def harmonic():
    return harmonic_oscillator_operator()


@pytest.fixture(scope="module")
def lattice():
    return lattice_longrange_operator()


def test_cubic_band_values(cubic):
    # offset -2 entry at column 5: -sqrt(5*4)/2
    assert cubic.entry(3, 5, DOUBLE) == pytest.approx(-math.sqrt(20) / 2)
    # outside the bandwidth
    assert cubic.entry(0, 5, DOUBLE) == 0
    # kinetic diagonal at m = 0
    assert cubic.entry(0, 0, DOUBLE) == pytest.approx(0.5)


def test_cubic_band_structure_sampled(cubic):
    for j in (0, 1, 7, 50):
        for i in range(max(0, j - 6), j + 7):
            v = cubic.entry(i, j, DOUBLE)
            if abs(i - j) > 3:
                assert v == 0


def test_cubic_complex_symmetry(cubic):
    for i in range(0, 201, 7):
        for d in (-3, -2, -1, 0, 1, 2, 3):
            j = i + d
            if j < 0 or j > 200:
                continue
            assert cubic.entry(i, j, DOUBLE) == pytest.approx(
                cubic.entry(j, i, DOUBLE), abs=1e-12)


def _quadrature_entry(i, j, x, logw, U):
    """Independent oracle: matrix elements of -d2/dx2 + i x^3 by quadrature.

    Uses the harmonic-oscillator identity -u_j'' = ((2j+1) - x^2) u_j, so the
    integrand is a polynomial times exp(-x^2), exact under Gauss-Hermite.
    The weight is folded into the decaying basis functions for stability.
    """
    wmod = np.exp(logw + x * x)
    q2 = float(np.sum(wmod * U[i] * U[j] * x ** 2))
    q3 = float(np.sum(wmod * U[i] * U[j] * x ** 3))
    val = -q2 + 1j * q3
    if i == j:
        val += 2 * j + 1
    return val


def test_cubic_quadrature_oracle(cubic):
    x, w = hermgauss(90)
    logw = np.log(w)
    K = 45
    U = np.zeros((K, len(x)))
    U[0] = math.pi ** -0.25 * np.exp(-x * x / 2)
    U[1] = x * math.sqrt(2.0) * U[0]
    for m in range(1, K - 1):
        U[m + 1] = x * math.sqrt(2.0 / (m + 1)) * U[m] \
            - math.sqrt(m / (m + 1.0)) * U[m - 1]
    worst = 0.0
    for i in range(41):
        for j in range(41):
            e = cubic.entry(i, j, DOUBLE)
            o = _quadrature_entry(i, j, x, logw, U)
            worst = max(worst, abs(e - o))
    assert worst < 1e-12


def test_entry_determinism(cubic, lattice):
    a = cubic.entry(13, 12, DOUBLE)
    b = cubic.entry(13, 12, DOUBLE)
    assert a == b
    la = lattice.entry(4, 2, DOUBLE)
    lb = lattice.entry(4, 2, DOUBLE)
    assert la == lb


def test_harmonic_values(harmonic):
    assert harmonic.entry(4, 4, DOUBLE) == 9
    assert harmonic.entry(3, 4, DOUBLE) == 0


def test_lattice_values(lattice):
    assert lattice.entry(0, 3, DOUBLE) == pytest.approx(0.25)
    v = lattice.entry(2, 2, DOUBLE)
    assert v == pytest.approx(complex(0.4, 2 * math.sin(2)))


def test_lattice_tail_monotone(lattice):
    for n in (5, 20, 60):
        for m in (0, 3, 11, 40):
            assert lattice.tail_bound(n, m) - lattice.tail_bound(n, m + 1) >= 0


def test_apply_column(cubic, harmonic, lattice):
    assert apply_column(harmonic, 2, DOUBLE) == [(2, (5 + 0j))]
    col = apply_column(cubic, 0, DOUBLE)
    assert [r for r, _ in col] == [0, 1, 2, 3]
    lat = apply_column(lattice, 0, DOUBLE, cutoff=2)
    assert [r for r, _ in lat] == [-2, -1, 0, 1, 2]
    with pytest.raises(StructureError):
        apply_column(lattice, 0, DOUBLE)


def test_entry_box_contains_entry(cubic, lattice):
    for (i, j) in ((3, 5), (5, 5), (8, 5), (2, 5)):
        box = cubic.entry_box(i, j, BOX_DOUBLE_LIB)
        assert box.contains(cubic.entry(i, j, DOUBLE))
    with MPIntervalScope(30):
        b = lattice.entry_box(7, 7, BOX_MP_LIB)
        v = lattice.entry(7, 7, DOUBLE)
        assert float(mpmath.mpf(b.re.a)) <= v.real <= float(mpmath.mpf(b.re.b)) + 1e-15
        # directed sine enclosure straddles the float value
        assert b.im.a <= 2 * math.sin(7) + 1e-15


def test_bigfloat_entries_match_double(cubic):
    ctx = bigfloat(30)
    for (i, j) in ((3, 5), (6, 5), (4, 7), (10, 7)):
        hi = cubic.entry(i, j, ctx)
        lo = cubic.entry(i, j, DOUBLE)
        assert abs(complex(hi) - lo) < 1e-14


def test_adjoint(cubic):
    adj = cubic.adjoint()
    z = adj.entry(5, 3, DOUBLE)
    assert z == pytest.approx(cubic.entry(3, 5, DOUBLE).conjugate())


# ---------------------------------------------------------------------------
# plugin grammar
# ---------------------------------------------------------------------------

def test_parse_and_eval_expression():
    from specgate.operators import _eval_scalar
    node = parse_expression("2*n + sqrt(n) - 1/4")
    assert _eval_scalar(node, 4, use_mp=False) == pytest.approx(8 + 2 - 0.25)
    node = parse_expression("i*sin(n) + cos(n)")
    v = _eval_scalar(node, 2, use_mp=False)
    assert v == pytest.approx(complex(math.cos(2), math.sin(2)))
    node = parse_expression("exp(-(n^2)/2)")
    assert _eval_scalar(node, 1, use_mp=False) == pytest.approx(math.exp(-0.5))


def test_expression_rejects_unknown():
    with pytest.raises(ExpressionError):
        parse_expression("n + unknown(3)")
    with pytest.raises(ExpressionError):
        parse_expression("2 ** n")
    with pytest.raises(ExpressionError):
        parse_expression("(n + 1")


def test_plugin_operator_roundtrip(tmp_path):
    desc = {
        "id": "shifted-harmonic",
        "domain": "naturals",
        "bands": [{"offset": 0, "coefficient": "2*n + 1 + 1/2"}],
        "symmetry": ["ComplexSymmetric", "RealSpectrumExpected"],
    }
    path = tmp_path / "plugin.json"
    import json
    path.write_text(json.dumps(desc))
    op = load_plugin_operator(str(path))
    assert op.banded and op.lower_bandwidth == 0
    assert op.entry(3, 3, DOUBLE) == pytest.approx(7.5)
    assert op.entry(2, 3, DOUBLE) == 0
    box = op.entry_box(3, 3, BOX_DOUBLE_LIB)
    assert box.contains(complex(7.5, 0))


def test_plugin_rejects_unknown_keys():
    with pytest.raises(ValueError):
        load_plugin_operator({"id": "x", "bands": [], "surprise": 1})


def test_plugin_interval_power_restriction():
    op = load_plugin_operator({
        "id": "frac-pow", "domain": "naturals",
        "bands": [{"offset": 0, "coefficient": "n^(1/2)"}]})
    # float path works; the enclosure path rejects non-integer powers
    assert op.entry(4, 4, DOUBLE) == pytest.approx(2.0)
    with pytest.raises(ExpressionError):
        op.entry_box(4, 4, BOX_DOUBLE_LIB)
