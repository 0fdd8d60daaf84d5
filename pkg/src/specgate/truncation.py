"""Finite truncations of operator specs.

Rectangular truncations keep every row reachable from the first N columns,
so for banded operators the smallest singular value of the finite matrix
equals the injection modulus of the operator restricted to the span of the
first N basis states - no interaction is dropped and no spurious coupling
is introduced.  Square truncations are provided for the spurious-mode
demonstration only.  Long-range operators get certified tail padding: the
number of extra rows is chosen so the operator norm of the neglected block
is below a requested epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

from .operators import INTEGERS, NATURALS, OperatorSpec, StructureError
from .precision import PrecisionContext

PAD_LIMIT = 20000


class TailError(ValueError):
    """Requested tail accuracy unreachable within the padding limit."""

    def __init__(self, message: str, best_bound: float):
        super().__init__(message)
        self.best_bound = best_bound


@dataclass(frozen=True)
class RectTruncation:
    """A materialized (N+k) x N truncation of (H - z I).

    ``row_start``/``col_start`` give the operator index of the first row and
    column (0 for operators over the naturals, negative for symmetric blocks
    over the integers).  ``tail_defect`` is a certified upper bound on the
    operator norm of the neglected block; it is exactly 0 for banded specs.
    """

    matrix: object
    N: int
    k: int
    shift: complex
    op_id: str
    tail_defect: float
    row_start: int = 0
    col_start: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        if isinstance(self.matrix, np.ndarray):
            return self.matrix.shape
        return (self.matrix.rows, self.matrix.cols)


def tail_padding(op: OperatorSpec, N: int, eps: float) -> int:
    """Smallest padding m whose aggregated tail bound is <= eps."""
    if op.tail_bound is None:
        raise StructureError(f"{op.id}: no tail bound available")
    if not eps > 0:
        raise ValueError("eps must be positive")
    best = op.tail_bound(N, 0)
    if best <= eps:
        return 0
    for m in range(1, PAD_LIMIT + 1):
        b = op.tail_bound(N, m)
        best = min(best, b)
        if b <= eps:
            return m
    raise TailError(
        f"{op.id}: tail bound stuck at {best:.3e} > eps={eps:.3e} "
        f"after {PAD_LIMIT} rows of padding", best)


def _block_geometry(op: OperatorSpec, N: int, eps: Optional[float]):
    """(rows, cols, row_start, col_start, k, tail_defect) for a truncation."""
    if op.banded:
        if op.index_domain == NATURALS:
            rows, cols = N + op.lower_bandwidth, N
            return rows, cols, 0, 0, op.lower_bandwidth, 0.0
        cols = 2 * N + 1
        rows = cols + op.lower_bandwidth + op.upper_bandwidth
        return rows, cols, -(N + op.upper_bandwidth), -N, rows - cols, 0.0
    if op.tail_bound is None:
        raise StructureError(f"{op.id}: unbounded bands and no tail bound")
    if eps is None:
        eps = 2.0 ** (-N)
    m = tail_padding(op, N, eps)
    # widen the float-evaluated bound a touch so it stays an upper bound
    defect = op.tail_bound(N, m) * (1.0 + 1e-12)
    if op.index_domain == INTEGERS:
        cols = 2 * N + 1
        rows = 2 * (N + m) + 1
        return rows, cols, -(N + m), -N, rows - cols, defect
    rows, cols = N + m, N
    return rows, cols, 0, 0, m, defect


def rectangular(op: OperatorSpec, z: complex, N: int, ctx: PrecisionContext,
                eps: Optional[float] = None) -> RectTruncation:
    """Rectangular truncation of (H - z I) over the first N basis states.

    For banded specs the rows cover the full band of every kept column and
    the truncation is exact (tail_defect 0).  Long-range specs get padding
    chosen by :func:`tail_padding` for accuracy ``eps`` (default 2^-N).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    rows, cols, row0, col0, k, defect = _block_geometry(op, N, eps)
    if ctx.is_double:
        mat = np.zeros((rows, cols), dtype=complex)
        for jc in range(cols):
            j = col0 + jc
            if op.banded:
                for i in op.band_rows(j):
                    ir = i - row0
                    if 0 <= ir < rows:
                        mat[ir, jc] = op.entry(i, j, ctx)
            else:
                for ir in range(rows):
                    mat[ir, jc] = op.entry(row0 + ir, j, ctx)
            jr = j - row0
            if 0 <= jr < rows:
                mat[jr, jc] -= z
        return RectTruncation(mat, N, k, z, op.id, defect, row0, col0)
    with ctx.workprec():
        zz = mpmath.mpc(z)
        mat = mpmath.zeros(rows, cols)
        for jc in range(cols):
            j = col0 + jc
            if op.banded:
                for i in op.band_rows(j):
                    ir = i - row0
                    if 0 <= ir < rows:
                        mat[ir, jc] = op.entry(i, j, ctx)
            else:
                for ir in range(rows):
                    mat[ir, jc] = op.entry(row0 + ir, j, ctx)
            jr = j - row0
            if 0 <= jr < rows:
                mat[jr, jc] -= zz
        return RectTruncation(mat, N, k, z, op.id, defect, row0, col0)


def square(op: OperatorSpec, z: complex, N: int, ctx: PrecisionContext):
    """Leading square block of (H - z I); kept for the spurious-mode demo.

    Operators over the integers use the symmetric block {-N..N}.
    """
    rows, cols, row0, col0, _, _ = _block_geometry(op, N, None)
    size = cols
    if ctx.is_double:
        mat = np.zeros((size, size), dtype=complex)
        for jc in range(size):
            j = col0 + jc
            if op.banded:
                indices = op.band_rows(j)
            else:
                indices = range(col0, col0 + size)
            for i in indices:
                ic = i - col0
                if 0 <= ic < size:
                    mat[ic, jc] = op.entry(i, j, ctx)
            mat[jc, jc] -= z
        return mat
    with ctx.workprec():
        mat = mpmath.zeros(size, size)
        zz = mpmath.mpc(z)
        for jc in range(size):
            j = col0 + jc
            indices = op.band_rows(j) if op.banded else range(col0, col0 + size)
            for i in indices:
                ic = i - col0
                if 0 <= ic < size:
                    mat[ic, jc] = op.entry(i, j, ctx)
            mat[jc, jc] -= zz
        return mat


def normal_truncation(op: OperatorSpec, z: complex, N: int, cutoff: int,
                      ctx: PrecisionContext):
    """The N x N Hermitian matrix P_N (H - z)* (H - z) P_N.

    Entries are assembled from operator columns; every column of a banded
    spec has finite support, so the infinite row sum is exact.  ``cutoff``
    limits column support for long-range specs (and must cover the band of
    a banded spec).  The result is symmetrized on output.
    """
    if op.banded:
        need = max(op.lower_bandwidth, op.upper_bandwidth)
        if cutoff < need:
            raise StructureError(f"{op.id}: cutoff {cutoff} below bandwidth {need}")
    elif cutoff < 1:
        raise StructureError("cutoff must be >= 1 for long-range specs")

    if op.index_domain == INTEGERS:
        size = 2 * N + 1
        col0 = -N
    else:
        size = N
        col0 = 0

    def column(j):
        from .operators import apply_column
        pairs = apply_column(op, j, ctx, cutoff=None if op.banded else cutoff)
        col = dict(pairs)
        col[j] = col.get(j, 0.0) - z
        return col

    cols = [column(col0 + jc) for jc in range(size)]
    if ctx.is_double:
        mat = np.zeros((size, size), dtype=complex)
        for a in range(size):
            ca = cols[a]
            for b in range(a, size):
                cb = cols[b]
                acc = 0.0 + 0.0j
                for i, va in ca.items():
                    vb = cb.get(i)
                    if vb is not None:
                        acc += np.conjugate(va) * vb
                mat[a, b] = acc
                mat[b, a] = np.conjugate(acc)
        return 0.5 * (mat + mat.conj().T)
    with ctx.workprec():
        mat = mpmath.zeros(size, size)
        for a in range(size):
            ca = cols[a]
            for b in range(a, size):
                cb = cols[b]
                acc = mpmath.mpc(0)
                for i, va in ca.items():
                    vb = cb.get(i)
                    if vb is not None:
                        acc += mpmath.conj(mpmath.mpc(va)) * mpmath.mpc(vb)
                mat[a, b] = acc
                mat[b, a] = mpmath.conj(acc)
        return mat
