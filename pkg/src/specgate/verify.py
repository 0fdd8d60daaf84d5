"""Rigorous residuals and certified eigenvalue enclosures.

The trust chain: a candidate pair (z, v) from the float stage is re-checked
from scratch by evaluating ||(H - z) v|| / ||v|| entirely in interval
arithmetic with enclosed operator entries.  For the operator classes handled
here the inverse resolvent norm equals the injection modulus, so this ratio
upper-bounds ||(H - z)^{-1}||^{-1} for *any* nonzero v; the inversion
formula of :mod:`specgate.ltp` then turns it into a radius around z that
provably contains a spectral point.  Certification fails closed: no finite
radius, no enclosure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np
from mpmath import iv as _iv
from mpmath import mp

from .intervals import (CIBox, Interval, MPBox, MPIntervalScope, iv_lower,
                        iv_upper, norm2)
from .ltp import (GapMembershipError, LTPModel, dist_bound)
from .operators import (BOX_DOUBLE_LIB, BOX_MP_LIB, INTEGERS, NATURALS,
                        OperatorSpec, StructureError)
from .precision import DOUBLE, PrecisionContext
from .truncation import tail_padding


class CertificationError(RuntimeError):
    """No enclosure could be produced (fails closed)."""


@dataclass(frozen=True)
class Bound:
    """A two-endpoint rigorous bound; endpoints are floats or mpmath floats."""

    lo: object
    hi: object


# ---------------------------------------------------------------------------
# verified residual
# ---------------------------------------------------------------------------

def _as_complex_list(v):
    if isinstance(v, np.ndarray):
        return [complex(t) for t in v]
    return list(v)


def _residual_rows_banded_boxes(op, z, vals, lib, box_point):
    """Interval rows of (H - z) v for a banded spec over the naturals."""
    L, U = op.lower_bandwidth, op.upper_bandwidth
    n = len(vals)
    zbox = box_point(z)
    vbox = [box_point(t) for t in vals]
    rows = []
    for i in range(n + L):
        acc = None
        for j in range(max(0, i - L), min(n, i + U + 1)):
            term = op.entry_box(i, j, lib) * vbox[j]
            acc = term if acc is None else acc + term
        if i < n:
            shift = zbox * vbox[i]
            acc = acc - shift if acc is not None else -shift
        if acc is not None:
            rows.append(acc)
    return rows, vbox


def _real_rotated_parts(v):
    """Split v into rotated real/imag parts; exact (multiplies by unit i powers).

    Returns (a, b) with v[m] = i^m (a[m] + i b[m]) as python floats or mpf.
    """
    a, b = [], []
    for m, t in enumerate(v):
        if isinstance(t, (int, float)):
            t = complex(t)
        re, im = (t.real, t.imag)
        r = m % 4
        if r == 0:
            a.append(re), b.append(im)
        elif r == 1:
            a.append(im), b.append(-re)
        elif r == 2:
            a.append(-re), b.append(-im)
        else:
            a.append(-im), b.append(re)
    return a, b


def verified_residual(op: OperatorSpec, z, v, ctx: PrecisionContext,
                      col_start: int = 0, pad: Optional[int] = None) -> Bound:
    """Rigorous enclosure of ||(H - z) v|| / ||v||.

    The upper endpoint rigorously bounds the inverse resolvent norm at z.
    Banded specs are evaluated exactly; long-range specs evaluate the rows
    of the padded block and fold the certified tail bound in additively.
    ``col_start`` is the operator index of v[0] (negative for symmetric
    blocks over the integers); ``pad`` overrides the default tail padding.
    """
    if op.entry_box is None:
        raise StructureError(f"{op.id}: entries are not enclosable")
    vals = _as_complex_list(v)
    if not vals or all(t == 0 for t in vals):
        raise ValueError("v must be nonzero")

    if ctx.is_double:
        return _verified_residual_double(op, z, vals, col_start, pad)
    # scope both the mpf working precision (exact conversions of z and v)
    # and the interval precision (directed rounding of the evaluation)
    with mp.workdps(ctx.digits + 5), MPIntervalScope(ctx.digits):
        return _verified_residual_mp(op, z, vals, col_start, pad, ctx)


def _verified_residual_double(op, z, vals, col_start, pad):
    zc = complex(z)
    if op.banded and op.index_domain == NATURALS:
        if "real_rotation" in op.hints and zc.imag == 0.0:
            num2, den2 = _rotated_norms_double(op, zc.real, vals)
            ratio = (num2 / den2).sqrt()
            return Bound(ratio.lo, ratio.hi)
        rows, vbox = _residual_rows_banded_boxes(
            op, zc, vals, BOX_DOUBLE_LIB, CIBox.point)
        ratio = norm2(rows) / norm2(vbox)
        return Bound(ratio.lo, ratio.hi)
    return _verified_residual_longrange(op, zc, vals, col_start, pad,
                                        double=True)


def _rotated_norms_double(op, zre, vals):
    """Squared rotated residual and vector norms as double Intervals."""
    rot = op.hints["real_rotation"]
    a, b = _real_rotated_parts(vals)
    n = len(vals)
    L = op.lower_bandwidth
    za = Interval.point(zre)
    num2 = Interval.point(0.0)
    for part in (a, b):
        if all(t == 0 for t in part):
            continue
        rows = [Interval.point(0.0) for _ in range(n + L)]
        pbox = [Interval.point(t) for t in part]
        for j in range(n):
            pj = pbox[j]
            if pj.lo == 0.0 and pj.hi == 0.0:
                continue
            for i, coeff in rot(j, BOX_DOUBLE_LIB):
                if i < 0:
                    continue
                term = coeff * pj
                if i == j:
                    term = term - za * pj
                rows[i] = rows[i] + term
        for r in rows:
            num2 = num2 + r.square()
    den2 = Interval.point(0.0)
    for t in list(a) + list(b):
        den2 = den2 + Interval.point(t).square()
    return num2, den2


def _verified_residual_mp(op, z, vals, col_start, pad, ctx):
    zz = mpmath.mpc(z)
    if op.banded and op.index_domain == NATURALS:
        if "real_rotation" in op.hints and zz.imag == 0:
            num2, den2 = _rotated_norms_mp(op, zz.real, vals)
            ratio = _iv.sqrt(num2 / den2)
            return Bound(iv_lower(ratio), iv_upper(ratio))
        rows, vbox = _residual_rows_banded_boxes(
            op, zz, vals, BOX_MP_LIB, MPBox.point)
        from .intervals import mp_norm2
        ratio = mp_norm2(rows) / mp_norm2(vbox)
        return Bound(iv_lower(ratio), iv_upper(ratio))
    return _verified_residual_longrange(op, zz, vals, col_start, pad,
                                        double=False)


def _rotated_norms_mp(op, zre, vals):
    rot = op.hints["real_rotation"]
    a, b = _real_rotated_parts(vals)
    n = len(vals)
    L = op.lower_bandwidth
    za = _iv.mpf(zre)
    zero = _iv.mpf(0)
    num2 = zero
    for part in (a, b):
        if all(t == 0 for t in part):
            continue
        rows = [zero] * (n + L)
        pbox = [_iv.mpf(t) for t in part]
        for j in range(n):
            pj = pbox[j]
            for i, coeff in rot(j, BOX_MP_LIB):
                if i < 0:
                    continue
                term = coeff * pj
                if i == j:
                    term = term - za * pj
                rows[i] = rows[i] + term
        for r in rows:
            num2 = num2 + r * r
    den2 = zero
    for t in list(a) + list(b):
        tt = _iv.mpf(t)
        den2 = den2 + tt * tt
    return num2, den2


def _verified_residual_longrange(op, z, vals, col_start, pad, double):
    if op.tail_bound is None:
        raise StructureError(f"{op.id}: unbounded bands and no tail bound")
    ncols = len(vals)
    if op.index_domain == INTEGERS:
        n_half = (ncols - 1) // 2
        if col_start != -n_half:
            raise ValueError("integer-domain vectors must cover a symmetric "
                             f"block; got col_start={col_start} for {ncols} entries")
    else:
        n_half = ncols
    if pad is None:
        pad = tail_padding(op, n_half, 2.0 ** -n_half)
    tail_val = op.tail_bound(n_half, pad) * (1.0 + 1e-12)

    row_lo = col_start - pad
    row_hi = col_start + ncols - 1 + pad
    if not double and "mp_residual_rows" in op.hints:
        rows, vnorm2 = op.hints["mp_residual_rows"](z, vals, col_start, pad)
        from .intervals import mp_norm2
        ratio = mp_norm2(rows) / _iv.sqrt(vnorm2) + _iv.mpf([0, tail_val])
        return Bound(iv_lower(ratio), iv_upper(ratio))
    if double:
        lib, point = BOX_DOUBLE_LIB, CIBox.point
    else:
        lib, point = BOX_MP_LIB, MPBox.point
    zbox = point(z)
    vbox = [point(t) for t in vals]
    rows = []
    for i in range(row_lo, row_hi + 1):
        acc = None
        for jc in range(ncols):
            j = col_start + jc
            term = op.entry_box(i, j, lib) * vbox[jc]
            acc = term if acc is None else acc + term
        if col_start <= i < col_start + ncols:
            acc = acc - zbox * vbox[i - col_start]
        rows.append(acc)
    if double:
        vnorm = norm2(vbox)
        ratio = norm2(rows) / vnorm + Interval(0.0, tail_val)
        return Bound(ratio.lo, ratio.hi)
    from .intervals import mp_norm2
    vnorm = mp_norm2(vbox)
    ratio = mp_norm2(rows) / vnorm + _iv.mpf([0, tail_val])
    return Bound(iv_lower(ratio), iv_upper(ratio))


# ---------------------------------------------------------------------------
# enclosures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Enclosure:
    """Certified eigenvalue enclosure: some spectral point lies within
    ``radius`` of ``center``, conditional on the listed hypotheses."""

    op_id: str
    index_n: int
    center: object
    radius: object
    residual_upper: object
    gap_index_m: int
    precision_digits: int
    conditional_on: tuple = field(default=())

    @property
    def is_complex(self) -> bool:
        return isinstance(self.center, (complex, mpmath.mpc))

    def _distance_to(self, value):
        complex_query = self.is_complex or isinstance(value, (complex, mpmath.mpc))
        if complex_query:
            return abs(mpmath.mpc(value) - mpmath.mpc(self.center))
        return abs(mpmath.mpf(value) - mpmath.mpf(self.center))

    def contains(self, value) -> bool:
        """Whether a (real or complex) point lies in the enclosure."""
        with mp.workdps(max(40, self.precision_digits + 10)):
            return self._distance_to(value) <= mpmath.mpf(self.radius)

    def intersects(self, value, slack) -> bool:
        """Whether the enclosure meets a disk of radius ``slack`` at value
        (containment up to the decimal rounding of a printed reference)."""
        with mp.workdps(max(40, self.precision_digits + 10)):
            return self._distance_to(value) <= \
                mpmath.mpf(self.radius) + mpmath.mpf(slack)

    def _sig_digits(self) -> int:
        # printed digits follow the certified radius: ceil(-log10 r) + 2
        r = float(self.radius)
        if r <= 0:
            return self.precision_digits
        return max(3, int(math.ceil(-math.log10(r))) + 2)

    def _format_real(self, x) -> str:
        sig = self._sig_digits()
        with mp.workdps(max(40, self.precision_digits + 10, sig + 10)):
            return mpmath.nstr(mpmath.mpf(x), sig, strip_zeros=False)

    def to_json(self) -> dict:
        if self.is_complex:
            center = {"re": self._format_real(mpmath.mpc(self.center).real),
                      "im": self._format_real(mpmath.mpc(self.center).imag)}
        else:
            center = self._format_real(self.center)
        with mp.workdps(20):
            radius = mpmath.nstr(mpmath.mpf(self.radius), 4)
            resid = mpmath.nstr(mpmath.mpf(self.residual_upper), 4)
        return {
            "op": self.op_id,
            "n": self.index_n,
            "center": center,
            "radius": radius,
            "residual_upper": resid,
            "gap_index_m": self.gap_index_m,
            "precision_digits": self.precision_digits,
            "conditional_on": list(self.conditional_on),
        }

    @classmethod
    def from_json(cls, data: dict) -> "Enclosure":
        digits = int(data["precision_digits"])
        with mp.workdps(max(40, digits + 10)):
            raw = data["center"]
            if isinstance(raw, dict):
                center = mpmath.mpc(mpmath.mpf(raw["re"]), mpmath.mpf(raw["im"]))
            else:
                center = mpmath.mpf(raw)
            return cls(
                op_id=data["op"],
                index_n=int(data["n"]),
                center=center,
                radius=mpmath.mpf(data["radius"]),
                residual_upper=mpmath.mpf(data["residual_upper"]),
                gap_index_m=int(data["gap_index_m"]),
                precision_digits=digits,
                conditional_on=tuple(data.get("conditional_on", ())),
            )


def certify_eigenvalue(op: OperatorSpec, model: LTPModel, candidate_z,
                       candidate_v, m: int, ctx: PrecisionContext,
                       index_n: Optional[int] = None,
                       col_start: int = 0, pad: Optional[int] = None) -> Enclosure:
    """Certify a candidate pair into an enclosure via the inversion formula.

    ``m`` is the strip index the caller has established (the bootstrap uses
    n + 1 so the bound stays valid on either side of the target eigenvalue).
    Fails closed: an infinite distance bound raises instead of producing an
    enclosure.
    """
    if index_n is None:
        index_n = m - 1
    if model.lambda_asymptotic is not None and not _plausible_strip(
            model, candidate_z, m):
        raise GapMembershipError(
            f"candidate {candidate_z} is not plausibly in strip {m}; "
            "bootstrap ordering required")
    bound = verified_residual(op, candidate_z, candidate_v, ctx,
                              col_start=col_start, pad=pad)
    eps = bound.hi
    radius = dist_bound(eps, m, model, ctx)
    if math.isinf(float(radius)):
        raise CertificationError(
            f"residual {float(eps):.3e} too large for a finite enclosure "
            f"at strip {m}")
    digits = 16 if ctx.is_double else ctx.digits
    if not ctx.is_double:
        with mp.workdps(ctx.digits + 10):
            center = +mpmath.mpc(candidate_z) if _is_complexlike(candidate_z) \
                else +mpmath.mpf(candidate_z)
    else:
        center = complex(candidate_z) if _is_complexlike(candidate_z) \
            else float(candidate_z)
    return Enclosure(
        op_id=op.id,
        index_n=index_n,
        center=center,
        radius=radius,
        residual_upper=eps,
        gap_index_m=m,
        precision_digits=digits,
        conditional_on=tuple(model.hypotheses),
    )


def _is_complexlike(z) -> bool:
    if isinstance(z, (complex, mpmath.mpc)):
        return bool(z.imag != 0)
    return False


def _plausible_strip(model, z, m: int) -> bool:
    """Loose seat check that z can lie in strip m (strict membership is the
    bootstrap's job; this only rejects grossly mismatched candidates)."""
    lam = model.lambda_asymptotic
    re_z = float(z.real) if hasattr(z, "real") else float(z)
    if re_z <= 0:
        return False
    slack = 2.0 * model.gap_floor + 2.0
    lo = 0.0 if m <= 1 else lam(m - 1) - slack
    hi = lam(m) + slack
    return lo <= re_z <= hi


def eigenvector_error_bound(enclosure: Enclosure, residual_upper,
                            neighbor_data, model: Optional[LTPModel] = None):
    """Upper bound on the sine of the angle to the true eigenspace.

    Splitting v along the certified eigenvalue's spectral projection, the
    complement part is controlled by a two-pole bound with the certified
    eigenvalue's own pole removed (neighboring enclosures supply certified
    pole distances); the projection part contributes at most
    radius * kappa_bound(n).  See docs/bounds.md for the derivation; the
    choice is deliberately conservative.
    """
    from .ltp import model_for_operator
    if model is None:
        model = model_for_operator(enclosure.op_id)
    prev_enc, next_enc = neighbor_data
    n = enclosure.index_n
    if next_enc is None:
        raise ValueError("eigenvector bounds need the next certified neighbor")
    with MPIntervalScope(max(30, enclosure.precision_digits + 5)):
        total = model.c_iv(n + 1)
        c_n = _iv.mpf(enclosure.center)
        r_n = _iv.mpf(enclosure.radius)
        for idx, enc in ((n - 1, prev_enc), (n + 1, next_enc)):
            if enc is None:
                continue
            d = abs(_iv.mpf(enc.center) - c_n) - _iv.mpf(enc.radius) - r_n
            if not iv_lower(d) > 0:
                raise ValueError(
                    "complement bound nonpositive: neighboring enclosures "
                    "overlap the certified one")
            total = total + model.kappa_iv(idx) / d
        amp = _iv.mpf(residual_upper) + r_n * model.kappa_iv(n)
        out = total * amp
        return iv_upper(out)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------

def enclosures_to_report(enclosures: Sequence[Enclosure], operator: str,
                         precision: str, timestamp: Optional[str] = None) -> dict:
    report = {
        "operator": operator,
        "precision": precision,
        "enclosures": [e.to_json() for e in enclosures],
    }
    if timestamp is not None:
        report["generated_at"] = timestamp
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
