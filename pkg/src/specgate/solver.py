"""End-to-end pipelines: grids, localization, bootstrap certification.

The certification flow for operators with real spectra (bootstrap order):

1. bracket the n-th eigenvalue from asymptotic midpoints, intersected with
   previously certified enclosures (float stage only - no rigor rests on
   the asymptotics, whose remainder constant is unquantified);
2. locate the minimum of gamma_N by golden-section search, at working
   precision chosen by the guard-digit rule;
3. scan the gap below the candidate on a mesh of step gap_floor/8 and
   require every mesh point's distance bound to exceed the step - the
   documented missed-eigenvalue test (an eigenvalue inside the gap would
   drag gamma_N below the detection threshold at an adjacent mesh point
   once N is in the converged regime);
4. certify the candidate with strip index n+1: both inversion constants
   grow with the index, so overshooting by one keeps the bound valid
   whichever side of the true eigenvalue the candidate landed on.

Operators with genuinely complex spectra (the lattice model) instead seed
candidates from a square-truncation eigensolve, polish them by deterministic
2-D descent, and certify each disk; gap scans do not apply, but pairwise
separation of the certified disks is enforced.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from mpmath import mp

from . import sigma as sigma_mod
from .ltp import LTPModel, dist_bound, model_for_operator
from .operators import (MP_LIB, COMPLEX_SYMMETRIC, INTEGERS, NATURALS,
                        OperatorSpec, REAL_SPECTRUM)
from .precision import DOUBLE, PrecisionContext, bigfloat, guard_digits
from .sigma import gamma, right_vector, sigma_min
from .truncation import square as square_truncation
from .truncation import tail_padding
from .verify import (CertificationError, Enclosure, certify_eigenvalue,
                     verified_residual)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SCAN_POINTS = 17
DOUBLE_N_CAP = 5000
BIGFLOAT_N_CAP = 3000


class MultiMinimumError(RuntimeError):
    """A bracket contains several separated deep minima; split it."""

    def __init__(self, message, minima):
        super().__init__(message)
        self.minima = minima


class GapScanError(RuntimeError):
    """The missed-eigenvalue scan failed at a mesh point."""

    def __init__(self, message, at):
        super().__init__(message)
        self.at = at


def default_n_schedule(n: int) -> int:
    return max(200, 40 * n)


# ---------------------------------------------------------------------------
# pseudospectrum grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridResult:
    region: tuple
    resolution: tuple
    values: np.ndarray
    N: int
    op_id: str


def pseudospectrum_grid(op: OperatorSpec, region, resolution, N: int,
                        ctx: PrecisionContext = DOUBLE,
                        parallelism: Optional[int] = None,
                        eps=None) -> GridResult:
    """gamma_N on a rectangular grid; rows follow the imaginary axis.

    Each value upper-bounds the inverse resolvent norm, so sublevel sets of
    the output are subsets of the true pseudospectrum.  Nodes are
    independent; evaluation parallelizes across a thread pool.
    """
    re_min, re_max, im_min, im_max = region
    nx, ny = resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2x2")
    res = np.linspace(re_min, re_max, nx)
    ims = np.linspace(im_min, im_max, ny)
    points = [complex(r, i) for i in ims for r in res]

    def val(z):
        return float(gamma(op, z, N, ctx, eps=eps))

    workers = parallelism if parallelism else None
    if workers == 1 or not ctx.is_double:
        values = [val(z) for z in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            values = list(ex.map(val, points))
    grid = np.array(values).reshape(ny, nx)
    return GridResult(tuple(region), (nx, ny), grid, N, op.id)


# ---------------------------------------------------------------------------
# bracketed 1-D minimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenpairResult:
    z_N: object
    f_N: object
    gamma_at_min: object
    N: int
    bracket: tuple
    iterations: int


def _golden_section(f, a, b, tol):
    """Golden-section descent; returns (argmin, evaluations).

    Interior points are reused in the standard way, which amplifies any
    representation error of the ratio by 1/ratio per step - harmless over
    the ~40 iterations a double tolerance needs, but fatal for the deep
    big-float searches here (hundreds of iterations).  The ratio is
    therefore taken at the ambient precision of the bracket, and the
    points are re-seeded whenever their ordering degrades.
    """
    if isinstance(a, mpmath.mpf) or isinstance(b, mpmath.mpf):
        ratio = (mpmath.sqrt(mpmath.mpf(5)) - 1) / 2
    else:
        ratio = GOLDEN
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    fc = f(c)
    fd = f(d)
    evals = 2
    while (b - a) > tol:
        if not (a < c < d < b):
            c = b - ratio * (b - a)
            d = a + ratio * (b - a)
            fc = f(c)
            fd = f(d)
            evals += 2
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - ratio * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + ratio * (b - a)
            fd = f(d)
        evals += 1
    return (a + b) / 2, evals


def locate_minimum(op: OperatorSpec, bracket, N: int, tol,
                   ctx: PrecisionContext = DOUBLE,
                   _depth: int = 0) -> EigenpairResult:
    """Golden-section search for the minimizer of gamma_N on a bracket.

    Unimodality is assumed, then validated by a coarse scan: a single
    descent-ascent pattern proceeds straight to the golden section; one
    deep dip among several wiggles recurses into the dip; two separated
    deep dips raise :class:`MultiMinimumError` (the caller must split).
    """
    a, b = bracket
    if not a < b:
        raise ValueError("bracket must satisfy a < b")

    def f(t):
        return float(gamma(op, t, N, DOUBLE)) if ctx.is_double else \
            gamma(op, t, N, ctx)

    total_evals = 0
    ts = [a + (b - a) * k / (SCAN_POINTS - 1) for k in range(SCAN_POINTS)]
    vs = [f(t) for t in ts]
    total_evals += SCAN_POINTS
    vmax = max(float(v) for v in vs)
    dip_threshold = max(1e-9, 0.05 * vmax)
    minima = [k for k in range(1, SCAN_POINTS - 1)
              if vs[k] <= vs[k - 1] and vs[k] <= vs[k + 1]]
    deep = [k for k in minima if float(vs[k]) < dip_threshold]
    if len(deep) >= 2 and any(deep[i + 1] - deep[i] > 1 for i in range(len(deep) - 1)):
        raise MultiMinimumError(
            f"bracket ({a}, {b}) holds several deep minima near "
            f"{[float(ts[k]) for k in deep]}; split it",
            [float(ts[k]) for k in deep])
    descents = sum(1 for k in range(1, SCAN_POINTS)
                   if float(vs[k]) < float(vs[k - 1]))
    unimodal = len(minima) <= 1 or (len(minima) == 0)
    if not unimodal:
        if len(deep) == 1 and _depth < 4:
            k = deep[0]
            sub = (float(ts[max(0, k - 1)]), float(ts[min(SCAN_POINTS - 1, k + 1)]))
            inner = locate_minimum(op, sub, N, tol, ctx, _depth + 1)
            return EigenpairResult(inner.z_N, inner.f_N, inner.gamma_at_min,
                                   N, (a, b),
                                   inner.iterations + total_evals)
        # shallow wiggles: narrow to the best scan point's neighborhood
        k = min(range(SCAN_POINTS), key=lambda i: float(vs[i]))
        a = float(ts[max(0, k - 1)])
        b = float(ts[min(SCAN_POINTS - 1, k + 1)])
    z, evals = _golden_section(f, a, b, tol)
    total_evals += evals
    v = right_vector(op, z, N, ctx)
    g = f(z)
    total_evals += 1
    return EigenpairResult(z, v, g, N, bracket, total_evals)


# ---------------------------------------------------------------------------
# bootstrap certification (real spectra)
# ---------------------------------------------------------------------------

def _default_target_radius(ctx: PrecisionContext):
    if ctx.is_double:
        return 1e-8
    return 10.0 ** (-(ctx.digits // 2))


def _verification_digits(n: int, ctx: PrecisionContext, eps_target) -> int:
    need = 25
    if eps_target > 0:
        need = max(need, int(math.ceil(-math.log10(eps_target))) + 12)
    base = 16 if ctx.is_double else ctx.digits
    return max(base, guard_digits(n), need)


def _bracket_for(model: LTPModel, n: int, prev_sup: Optional[float]):
    lam = model.lambda_asymptotic
    if n == 1:
        lo = 0.5 * lam(1)
    else:
        lo = 0.5 * (lam(n - 1) + lam(n))
    hi = 0.5 * (lam(n) + lam(n + 1))
    if prev_sup is not None:
        lo = max(lo, prev_sup + 1e-12)
    return lo, hi


def _kappa_estimate(v) -> float:
    """Float estimate of ||v||^2 / |v^T v| (complex-symmetric conditioning)."""
    arr = np.asarray([complex(t) for t in v])
    denom = abs(np.sum(arr * arr))
    if denom == 0:
        return math.inf
    return float(np.sum(np.abs(arr) ** 2) / denom)


def _mp_polish_vector(op, z, N, digits):
    """Recompute the singular direction at z with big-float inverse iteration."""
    ctxv = bigfloat(max(digits, 20))
    sig, v = sigma_min(op, z, N, ctxv, want_vector=True)
    return sig, v


def _gap_scan(op, model, m_eff, lo, hi, N, digits_v, ctx):
    """Mesh scan certifying no eigenvalue hides in (lo, hi).

    One mesh step is trimmed from both ends: the minimal-spacing hypothesis
    already excludes a second eigenvalue within gap_floor of a certified
    one, and gamma legitimately dips there.
    """
    step = model.gap_floor / 8.0
    lo = lo + step
    hi = hi - step
    if hi <= lo:
        return
    count = max(2, int(math.ceil((hi - lo) / step)) + 1)
    step = (hi - lo) / (count - 1)
    scan_ctx = bigfloat(max(25, min(digits_v, 40)))
    n_scan = min(N, 400)
    for k in range(count):
        t = lo + k * step
        v = right_vector(op, t, n_scan, DOUBLE)
        eps_t = verified_residual(op, t, v, scan_ctx).hi
        db = dist_bound(eps_t, m_eff, model, ctx)
        if not (math.isinf(float(db)) or float(db) > step):
            raise GapScanError(
                f"gap scan failed at z={t}: distance bound {float(db):.3e} "
                f"below mesh step {step:.3e}", t)


def bootstrap_certify(op: OperatorSpec, model: Optional[LTPModel], n_max: int,
                      ctx: PrecisionContext = DOUBLE,
                      N_schedule: Optional[Callable[[int], int]] = None,
                      target_radius=None) -> list[Enclosure]:
    """Certify the lowest n_max eigenvalues in increasing order.

    Real-spectrum operators run the bracket/locate/scan/certify loop with
    N escalation (schedule value, then geometric growth guided by the
    observed residual decay, capped).  Complex-spectrum operators delegate
    to the square-truncation seeded pipeline.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if model is None:
        model = model_for_operator(op.id)
    if REAL_SPECTRUM not in op.symmetry_flags:
        return _certify_complex_spectrum(op, model, n_max, ctx,
                                         N_schedule, target_radius)
    schedule = N_schedule or default_n_schedule
    cap = DOUBLE_N_CAP if ctx.is_double else BIGFLOAT_N_CAP
    target = target_radius if target_radius is not None else \
        _default_target_radius(ctx)

    enclosures: list[Enclosure] = []
    prev_sup = None
    for n in range(1, n_max + 1):
        m_eff = n + 1
        kap_eff = model.kappa_bound(m_eff)
        eps_target = 0.45 * target / (2.0 * kap_eff) if not math.isinf(kap_eff) \
            else 0.0
        if eps_target <= 0:
            raise CertificationError(
                f"target radius {target} unreachable for index {n}: "
                "inversion constant overflows")
        digits_v = _verification_digits(n, ctx, eps_target)
        bracket = _bracket_for(model, n, prev_sup)

        enc = None
        N = schedule(n)
        attempts = []
        z_loc = None
        while True:
            N = min(N, cap)
            z_loc, v_cand, eps_hat = _locate_candidate(
                op, model, bracket, N, ctx, digits_v, eps_target, z_loc, n)
            bound = verified_residual(op, z_loc, v_cand, bigfloat(digits_v))
            eps_cert = bound.hi
            radius = dist_bound(eps_cert, m_eff, model, ctx)
            if not math.isinf(float(radius)) and float(radius) <= target:
                _gap_scan(op, model, m_eff,
                          prev_sup if prev_sup is not None else 0.0,
                          float(z_loc) - float(radius), N, digits_v, ctx)
                enc = certify_eigenvalue(op, model, z_loc, v_cand, m_eff,
                                         bigfloat(digits_v), index_n=n)
                break
            attempts.append((N, float(eps_cert)))
            if N >= cap:
                raise CertificationError(
                    f"index {n}: radius {float(radius):.3e} above target "
                    f"{target:.1e} at the N cap {cap}")
            N = _escalate_N(attempts, eps_target, N, cap)

        if enc.radius != 0 and prev_sup is not None:
            gap_to_prev = float(enc.center) - float(enc.radius) - prev_sup
            if not float(enc.radius) < 0.5 * gap_to_prev:
                raise CertificationError(
                    f"index {n}: radius {float(enc.radius):.3e} not separated "
                    "from the previous enclosure")
        enclosures.append(enc)
        prev_sup = float(enc.center) + float(enc.radius)
    return enclosures


def _escalate_N(attempts, eps_target, N, cap):
    """Next truncation size: geometric fit of the residual decay when two
    attempts exist, plain doubling otherwise; growth at least 30 percent."""
    if len(attempts) >= 2:
        (N1, e1), (N2, e2) = attempts[-2], attempts[-1]
        if e2 > 0 and e1 > e2 and N2 > N1:
            slope = (math.log10(e1) - math.log10(e2)) / (N2 - N1)
            if slope > 1e-4:
                need = (math.log10(e2) - math.log10(eps_target)) / slope
                fitted = int(math.ceil(N2 + 1.15 * need))
                return min(cap, max(fitted, int(1.3 * N)))
    return min(cap, max(2 * N, N + 50))


def _locate_candidate(op, model, bracket, N, ctx, digits_v, eps_target,
                      z_prev, index_n):
    """Double-precision localization, big-float refinement, vector polish.

    The double stage localizes the minimizer only to within roughly
    kappa * (LAPACK sigma noise), so the big-float refinement bracket is
    sized by the condition-number bound; a result pinned at a bracket edge
    triggers re-expansion.
    """
    if z_prev is None:
        loc = locate_minimum(op, bracket, min(N, 600), 1e-9, DOUBLE)
        z = float(loc.z_N)
    else:
        z = float(z_prev)
    kap = model.kappa_bound(index_n)
    half0 = max(1e-8 * max(1.0, abs(z)),
                min(0.4 * model.gap_floor,
                    (kap if math.isfinite(kap) else 1e12) * 1e-9))
    work = bigfloat(digits_v + 5)
    with mp.workdps(digits_v + 5):
        tol = mpmath.mpf(eps_target) / 2

        def fmp(t):
            return gamma(op, t, N, work)

        half = mpmath.mpf(half0)
        for _ in range(3):
            lo = mpmath.mpf(z) - half
            hi = mpmath.mpf(z) + half
            zm, _ = _golden_section(fmp, lo, hi, tol)
            if zm - lo > 3 * tol and hi - zm > 3 * tol:
                break
            half = half * 128  # minimum pinned at an edge: widen and retry
        sig, v = _mp_polish_vector(op, zm, N, digits_v)
        return zm, v, sig


# ---------------------------------------------------------------------------
# complex-spectrum pipeline (square-truncation seeds + 2-D descent)
# ---------------------------------------------------------------------------

def _coordinate_descent(fn, z0: complex, span: float, tol: float):
    """Deterministic 2-D local minimization: alternating golden sections on
    the axes, then a shrinking 3x3 grid refinement."""
    z = complex(z0)
    width = span
    for _ in range(3):
        re, _ = _golden_section(lambda t: fn(complex(t, z.imag)),
                                z.real - width, z.real + width,
                                max(tol, width * 1e-10))
        z = complex(re, z.imag)
        im, _ = _golden_section(lambda t: fn(complex(z.real, t)),
                                z.imag - width, z.imag + width,
                                max(tol, width * 1e-10))
        z = complex(z.real, im)
        width *= 0.35
    fbest = fn(z)
    while width > tol:
        improved = False
        for dre in (-width, 0.0, width):
            for dim in (-width, 0.0, width):
                if dre == 0.0 and dim == 0.0:
                    continue
                cand = complex(z.real + dre, z.imag + dim)
                fc = fn(cand)
                if fc < fbest:
                    z, fbest = cand, fc
                    improved = True
        if not improved:
            width *= 0.5
    return z, fbest


def _certify_complex_spectrum(op, model, n_max, ctx, N_schedule,
                              target_radius) -> list[Enclosure]:
    """Seed candidates from a square-truncation eigensolve, refine, certify.

    Eigenvalues are indexed by increasing modulus; complex-pair partners get
    consecutive indices and mirrored certificates (the verification of the
    conjugate candidate produces the exact mirror up to outward rounding).
    Completeness of the enumeration is not certified on this path - each
    enclosure individually is.
    """
    n_block = N_schedule(0) if N_schedule else 45
    seed_block = min(n_block, 30)
    S = square_truncation(op, 0.0, seed_block, DOUBLE)
    eigs = np.linalg.eigvals(np.asarray(S, dtype=complex))
    eigs = sorted(eigs, key=lambda t: (abs(t), -t.imag))
    pad = tail_padding(op, n_block, 2.0 ** -n_block)
    digits_v = max(25, 16 if ctx.is_double else ctx.digits)

    def fn(z):
        return float(gamma(op, z, n_block, DOUBLE))

    enclosures: list[Enclosure] = []
    used: list[complex] = []
    index = 1
    for z0 in eigs:
        if len(enclosures) >= n_max:
            break
        if z0.imag < -1e-9:
            continue  # lower-half partner is emitted as a mirror
        if any(abs(z0 - u) < 1e-6 for u in used):
            continue
        if fn(complex(z0)) > 0.05:
            continue  # square-truncation artifact
        z_ref, _ = _coordinate_descent(fn, complex(z0), 0.05, 1e-13)
        used.append(z_ref)
        is_real = abs(z_ref.imag) < 1e-9
        if is_real:
            z_ref = complex(z_ref.real, 0.0)
        v = right_vector(op, z_ref, n_block, DOUBLE, eps=2.0 ** -n_block)
        enc = certify_eigenvalue(op, model, z_ref if not is_real else z_ref.real,
                                 v, 1, bigfloat(digits_v), index_n=index,
                                 col_start=-n_block, pad=pad)
        if target_radius is not None and float(enc.radius) > target_radius:
            raise CertificationError(
                f"lattice index {index}: radius {float(enc.radius):.3e} "
                f"above target {target_radius:.1e}")
        enclosures.append(enc)
        index += 1
        if not is_real and len(enclosures) < n_max:
            v_mirror = _mirror_vector(v)
            enc_m = certify_eigenvalue(op, model, z_ref.conjugate(), v_mirror,
                                       1, bigfloat(digits_v), index_n=index,
                                       col_start=-n_block, pad=pad)
            enclosures.append(enc_m)
            index += 1
    _check_separation(enclosures)
    return enclosures


def _mirror_vector(v):
    """Candidate for the conjugate eigenvalue: flip the block and conjugate."""
    arr = np.asarray(v)
    return np.conj(arr[::-1])


def _check_separation(enclosures: Sequence[Enclosure]):
    for i in range(len(enclosures)):
        for j in range(i + 1, len(enclosures)):
            a, b = enclosures[i], enclosures[j]
            d = abs(complex(a.center) - complex(b.center))
            if d == 0.0:
                continue  # conjugate partners of a real-axis pair
            if d <= float(a.radius) + float(b.radius):
                raise CertificationError(
                    f"enclosures {a.index_n} and {b.index_n} overlap")


# ---------------------------------------------------------------------------
# condition numbers, angles, eigenfunctions, spurious modes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionResult:
    index_n: int
    kappa: float
    consistency: float
    N: int


def condition_number(op: OperatorSpec, enclosure: Enclosure, N: int,
                     ctx: PrecisionContext = DOUBLE) -> ConditionResult:
    """Eigenvalue condition number from near-null right/left vectors.

    Complex-symmetric specs use the conjugate shortcut, reducing to
    ||v||^2 / |v^T v|.  The value is a float diagnostic (not certified);
    ``consistency`` is the relative difference against a recomputation at
    5N/4.
    """
    z = enclosure.center

    def kappa_at(nn: int) -> float:
        if ctx.is_double:
            v = right_vector(op, complex(z), nn, DOUBLE)
            arr = np.asarray(v)
            denom = abs(np.sum(arr * arr))
            nrm = float(np.sum(np.abs(arr) ** 2))
        else:
            with ctx.workprec():
                _, v = sigma_min(op, z, nn, ctx, want_vector=True)
                denom = abs(mp.fsum([t * t for t in v]))
                nrm = mp.fsum([abs(t) ** 2 for t in v])
        if COMPLEX_SYMMETRIC not in op.symmetry_flags:
            from .sigma import left_null_vector
            w = left_null_vector(op, z, nn, ctx)
            arrw = np.asarray([complex(t) for t in w])
            arrv = np.asarray([complex(t) for t in v])
            denom = abs(np.vdot(arrw, arrv))
            return float(np.linalg.norm(arrv) * np.linalg.norm(arrw) / denom)
        floor = 10.0 * ctx.unit_roundoff * float(nrm)
        if float(denom) < floor:
            raise ValueError(
                f"self-overlap below {floor:.2e}: ill-conditioned beyond "
                f"{ctx.describe()}; raise the precision")
        return float(nrm / denom)

    k1 = kappa_at(N)
    k2 = kappa_at(max(N + 20, (5 * N) // 4))
    consistency = abs(k1 - k2) / max(k1, k2)
    return ConditionResult(enclosure.index_n, k2, consistency, N)


def subspace_angle(u, w) -> float:
    """Angle between the spans of two vectors, in [0, pi/2].

    Vectors of different truncation sizes are compared in the larger space
    (zero padding).
    """
    a = np.asarray([complex(t) for t in u])
    b = np.asarray([complex(t) for t in w])
    if a.shape[0] < b.shape[0]:
        a = np.pad(a, (0, b.shape[0] - a.shape[0]))
    elif b.shape[0] < a.shape[0]:
        b = np.pad(b, (0, a.shape[0] - b.shape[0]))
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero vector")
    c = abs(np.vdot(a, b)) / (na * nb)
    return float(np.arccos(min(1.0, max(0.0, c))))


@dataclass(frozen=True)
class EigenfunctionSamples:
    xs: np.ndarray
    values: np.ndarray
    underflow: np.ndarray


def evaluate_eigenfunction(coeffs, xs, ctx: PrecisionContext = DOUBLE
                           ) -> EigenfunctionSamples:
    """Evaluate sum_m c_m u_m(x) with the stable normalized recurrence
    u_{m+1} = x sqrt(2/(m+1)) u_m - sqrt(m/(m+1)) u_{m-1}.

    Where exp(-x^2/2) underflows to zero in doubles the sample is an exact
    0 and the underflow flag is set.
    """
    c = np.asarray([complex(t) for t in coeffs])
    xs = np.asarray([float(x) for x in xs], dtype=float)
    K = len(c)
    out = np.zeros(len(xs), dtype=complex)
    under = np.zeros(len(xs), dtype=bool)
    for ix, x in enumerate(xs):
        g = math.exp(-x * x / 2.0) if -x * x / 2.0 > -745.0 else 0.0
        if g == 0.0:
            under[ix] = True
            continue
        u_prev = 0.0
        u_cur = math.pi ** -0.25 * g
        acc = c[0] * u_cur
        for m in range(K - 1):
            u_next = x * math.sqrt(2.0 / (m + 1)) * u_cur \
                - math.sqrt(m / (m + 1.0)) * u_prev
            u_prev, u_cur = u_cur, u_next
            acc += c[m + 1] * u_cur
        out[ix] = acc
    return EigenfunctionSamples(xs, out, under)


@dataclass(frozen=True)
class SpuriousModeReport:
    eigenvalues: np.ndarray
    gammas: np.ndarray
    spurious_threshold: float

    @property
    def spurious(self) -> np.ndarray:
        return self.gammas > self.spurious_threshold


def square_spectrum_demo(op: OperatorSpec, N: int,
                         ctx: PrecisionContext = DOUBLE,
                         threshold: float = 1e-2) -> SpuriousModeReport:
    """Dense spectrum of the square truncation with gamma_{2N} annotations.

    Square truncations drop the interactions leaving the block, which breaks
    the operator's symmetry structure; eigenvalues whose gamma at the doubled
    rectangular truncation stays away from zero are artifacts.
    """
    S = np.asarray(square_truncation(op, 0.0, N, DOUBLE), dtype=complex)
    eigs = np.linalg.eigvals(S)
    order = np.argsort(eigs.real)
    eigs = eigs[order]
    gam = np.array([float(gamma(op, complex(z), 2 * N, DOUBLE)) for z in eigs])
    return SpuriousModeReport(eigs, gam, threshold)
