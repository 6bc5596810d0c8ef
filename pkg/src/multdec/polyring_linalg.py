"""Exact linear algebra over the polynomial ring F_p[z].

Rank is located by evaluating the matrix on an explicit integer-grid
hitting set; a kernel vector with the degree bound ``t * m`` comes out of
the adjugate/determinant of a maximal nonsingular pivot submatrix.
Determinants and adjugates are computed by fraction-free (Bareiss)
elimination on the polynomial entries; every division along the way is an
exact polynomial division and is checked.

Two interchangeable elimination engines sit underneath:

* a generic one on sparse :class:`~multdec.poly.Polynomial` entries, used
  for arbitrary matrices;
* a dense one for matrices whose columns are z-homogeneous of uniform
  degree (the shape the decoder's interpolation produces, where every
  intermediate minor stays homogeneous).  Entries dehomogenize to short
  univariate coefficient arrays, which keeps elimination fast without
  changing the algorithm.

All functions are pure; matrices are immutable after construction.
"""

from __future__ import annotations

import itertools
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import modlin
from .errors import FieldTooSmallError, ParameterError
from .field import PrimeField
from .poly import Polynomial

# Entries in the dense engine are (nominal_degree, ascending int64 coeffs);
# None is the zero entry.  The engine is only engaged when accumulated
# convolutions cannot overflow int64.
_DENSE_OVERFLOW_GUARD = 2**62


class HittingSet(NamedTuple):
    """Integer grid {0..degree_bound}^k; no nonzero k-variate polynomial of
    total degree <= degree_bound vanishes on all of it."""

    degree_bound: int
    k: int
    points: Tuple[Tuple[int, ...], ...]


def hitting_set(degree_bound: int, k: int, field: PrimeField) -> HittingSet:
    """The grid {0,...,degree_bound}^k as field elements, row-major."""
    if degree_bound < 0:
        raise ParameterError("degree bound must be nonnegative")
    if degree_bound >= field.p:
        raise FieldTooSmallError(
            f"hitting set for degree {degree_bound} needs p > {degree_bound}, "
            f"got p = {field.p}; this parameter set needs a larger prime")
    pts = tuple(itertools.product(range(degree_bound + 1), repeat=k))
    return HittingSet(degree_bound, k, pts)


class PolyMatrix:
    """A t' x t matrix of z-block polynomials over one field."""

    __slots__ = ("field", "k", "rows", "cols", "entries", "max_entry_degree")

    def __init__(self, entries: Sequence[Sequence[Polynomial]]):
        if not entries or not entries[0]:
            raise ParameterError("matrix needs at least one entry")
        first = entries[0][0]
        field, k = first.field, first.nz
        cols = len(entries[0])
        for row in entries:
            if len(row) != cols:
                raise ParameterError("ragged matrix")
            for e in row:
                if e.nx != 0 or e.nz != k or e.field.p != field.p:
                    raise ParameterError("entries must be z-block polynomials on one field")
        self.field = field
        self.k = k
        self.rows = len(entries)
        self.cols = cols
        self.entries = tuple(tuple(row) for row in entries)
        self.max_entry_degree = max(
            0, max(e.z_degree() for row in entries for e in row))

    def evaluate(self, point: Sequence[int]) -> List[List[int]]:
        out = []
        for row in self.entries:
            out.append([e.evaluate(z=point) if e.coeffs else 0 for e in row])
        return out

    def apply(self, u: Sequence[Polynomial]) -> List[Polynomial]:
        """Matrix-vector product A u with full polynomial multiplication."""
        if len(u) != self.cols:
            raise ParameterError("vector length mismatch")
        out = []
        for row in self.entries:
            acc = Polynomial.zero(self.field, 0, self.k)
            for e, v in zip(row, u):
                acc = acc + e * v
            out.append(acc)
        return out

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix([[self.entries[i][j] for j in cols] for i in rows])

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows}x{self.cols} over F_{self.field.p}[z^{self.k}])"


class MaxRankResult(NamedTuple):
    point: Tuple[int, ...]
    rank: int
    pivot_rows: Tuple[int, ...]
    pivot_cols: Tuple[int, ...]


# ---------------------------------------------------------------------------
# Dense engine (column-homogeneous matrices, k <= 2)
# ---------------------------------------------------------------------------

def _dense_profile(A: PolyMatrix) -> Optional[List[int]]:
    """Per-column uniform z-homogeneity degrees, or None if not structured."""
    if A.k not in (1, 2):
        return None
    # int64 overflow guard for accumulated convolution sums
    max_len = A.cols * A.max_entry_degree + 2
    if (A.field.p - 1) ** 2 * max_len >= _DENSE_OVERFLOW_GUARD:
        return None
    degrees = []
    for j in range(A.cols):
        deg = None
        for i in range(A.rows):
            e = A.entries[i][j]
            if e.is_zero():
                continue
            d = e.z_degree()
            if not e.is_homogeneous_z(d):
                return None
            if deg is None:
                deg = d
            elif deg != d:
                return None
        degrees.append(0 if deg is None else deg)
    return degrees


def _dehomogenize(e: Polynomial):
    """Homogeneous z-poly -> (nominal degree, coeffs of P(z1, 1) ascending)."""
    if e.is_zero():
        return None
    g = e.z_degree()
    if e.nz == 1:
        return g, np.array([e.coeff(ze=(g,))], dtype=np.int64)
    arr = np.zeros(g + 1, dtype=np.int64)
    for (_, ze), c in e.coeffs.items():
        arr[ze[0]] = c
    return g, _trim(arr)


def _rehomogenize(entry, field: PrimeField, k: int) -> Polynomial:
    if entry is None:
        return Polynomial.zero(field, 0, k)
    g, arr = entry
    if k == 1:
        assert arr.size == 1
        return Polynomial.z_poly(field, 1, {(g,): int(arr[0])})
    coeffs = {(t, g - t): int(c) for t, c in enumerate(arr.tolist()) if c}
    return Polynomial.z_poly(field, 2, coeffs)


def _trim(arr: np.ndarray) -> np.ndarray:
    nz = np.nonzero(arr)[0]
    if nz.size == 0:
        return arr[:1]
    return arr[: nz[-1] + 1]


class _DenseEngine:
    """Fraction-free elimination on dehomogenized entries."""

    def __init__(self, field: PrimeField):
        self.field = field
        self.p = field.p

    # -- entry arithmetic --

    def mul(self, e1, e2):
        if e1 is None or e2 is None:
            return None
        g1, a1 = e1
        g2, a2 = e2
        if a1.size == 1 and a2.size == 1:
            prod = np.array([int(a1[0]) * int(a2[0]) % self.p], dtype=np.int64)
        elif a1.size == 1:
            prod = (a2 * int(a1[0])) % self.p
        elif a2.size == 1:
            prod = (a1 * int(a2[0])) % self.p
        else:
            prod = np.convolve(a1, a2) % self.p
        return g1 + g2, prod

    def sub(self, e1, e2):
        if e2 is None:
            return e1
        if e1 is None:
            g, a = e2
            return g, (-a) % self.p
        g1, a1 = e1
        g2, a2 = e2
        assert g1 == g2, "homogeneity bookkeeping broke"
        n = max(a1.size, a2.size)
        out = np.zeros(n, dtype=np.int64)
        out[: a1.size] = a1
        out[: a2.size] -= a2
        out %= self.p
        if not out.any():
            return None
        return g1, _trim(out)

    def _inv_series(self, d: np.ndarray, length: int) -> np.ndarray:
        """Power-series inverse of d (d[0] != 0) to the given length."""
        out = np.zeros(length, dtype=np.int64)
        inv0 = self.field.inv(int(d[0]))
        out[0] = inv0
        dd = d.size - 1
        for i in range(1, length):
            jmax = min(i, dd)
            s = int(np.dot(d[1: jmax + 1], out[i - jmax: i][::-1])) % self.p
            out[i] = (-s * inv0) % self.p
        return out

    def divider(self, den):
        """Returns an exact-division closure for a fixed divisor."""
        g_den, a_den = den
        rev_den = a_den[::-1].copy()
        cache = {"inv": None}

        def divide(num):
            if num is None:
                return None
            g_num, a_num = num
            qlen = a_num.size - a_den.size + 1
            if qlen <= 0:
                raise ParameterError("division is not exact (degree)")
            inv = cache["inv"]
            if inv is None or inv.size < qlen:
                inv = self._inv_series(rev_den, max(qlen, 2 * (inv.size if inv is not None else 8)))
                cache["inv"] = inv
            rev_num = a_num[::-1]
            if rev_num.size == 1 and qlen == 1:
                q = np.array([int(rev_num[0]) * int(inv[0]) % self.p], dtype=np.int64)
            else:
                q = np.convolve(rev_num[:qlen], inv[:qlen])[:qlen] % self.p
            q = q[::-1].copy()
            if __debug__:
                chk = np.convolve(q, a_den) % self.p if q.size > 1 or a_den.size > 1 \
                    else np.array([int(q[0]) * int(a_den[0]) % self.p], dtype=np.int64)
                pad = np.zeros(chk.size, dtype=np.int64)
                pad[: a_num.size] = a_num
                assert (chk == pad).all(), "inexact dense division"
            return g_num - g_den, _trim(q)

        return divide

    # -- elimination --

    def forward(self, mat, main_cols: int, col_swap: bool):
        """One-step fraction-free forward elimination in place.

        Returns (pivots, sign, col_perm).  ``mat`` is a list of entry rows;
        elimination runs over the first ``main_cols`` columns, updating all
        later (augmented) columns as well.
        """
        rows = len(mat)
        cols = len(mat[0])
        col_perm = list(range(cols))
        pivots = []
        sign = 1
        prev = None
        r = 0
        c = 0
        while r < rows and c < main_cols:
            sel = next((i for i in range(r, rows) if mat[i][c] is not None), None)
            if sel is None:
                if not col_swap:
                    return pivots, sign, col_perm
                c += 1
                continue
            if sel != r:
                mat[sel], mat[r] = mat[r], mat[sel]
                sign = -sign
            if col_swap and c != r:
                for row in mat:
                    row[c], row[r] = row[r], row[c]
                col_perm[c], col_perm[r] = col_perm[r], col_perm[c]
                c = r
            piv = mat[r][r if col_swap else c]
            divide = self.divider(prev) if prev is not None else (lambda x: x)
            pc = r if col_swap else c
            for i in range(r + 1, rows):
                head = mat[i][pc]
                for j in range(pc + 1, cols):
                    term1 = self.mul(piv, mat[i][j])
                    term2 = self.mul(head, mat[r][j])
                    mat[i][j] = divide(self.sub(term1, term2))
                mat[i][pc] = None
            pivots.append(pc)
            prev = piv
            r += 1
            c = pc + 1
        return pivots, sign, col_perm


# ---------------------------------------------------------------------------
# Generic sparse engine
# ---------------------------------------------------------------------------

class _SparseEngine:
    """Same elimination on sparse Polynomial entries (any block shape)."""

    def __init__(self, field: PrimeField, nx: int, nz: int):
        self.field = field
        self.zero = Polynomial.zero(field, nx, nz)

    def mul(self, e1, e2):
        if e1 is None or e2 is None:
            return None
        return e1 * e2

    def sub(self, e1, e2):
        if e2 is None:
            return e1
        out = (self.zero if e1 is None else e1) - e2
        return None if out.is_zero() else out

    def divider(self, den):
        def divide(num):
            if num is None:
                return None
            return num.exact_div(den)
        return divide

    forward = _DenseEngine.forward  # identical control flow over the entry ops


def _wrap_sparse(A_entries) -> List[List[Optional[Polynomial]]]:
    return [[None if e.is_zero() else e for e in row] for row in A_entries]


def _backsubstitute(engine, mat, r: int, sign: int, rhs_cols: Sequence[int]):
    """Solve U x = det * c for each augmented column, fraction-free.

    ``mat`` is the forward-eliminated square system (pivots on the
    diagonal); returns (det_entry, columns) where each solution column is a
    list of entries satisfying A' x = det(A') * b exactly.
    """
    det = mat[r - 1][r - 1] if r else None
    if r == 0:
        det_entry = _one_entry(engine)
    else:
        det_entry = det
    if sign < 0:
        det_entry = engine.sub(None, det_entry)
    sols = []
    for c in rhs_cols:
        x: List[Optional[object]] = [None] * r
        for i in range(r - 1, -1, -1):
            acc = engine.mul(det_entry, mat[i][c])
            for j in range(i + 1, r):
                acc = engine.sub(acc, engine.mul(mat[i][j], x[j]))
            x[i] = engine.divider(mat[i][i])(acc) if acc is not None else None
        sols.append(x)
    return det_entry, sols


def _one_entry(engine):
    if isinstance(engine, _DenseEngine):
        return (0, np.array([1], dtype=np.int64))
    return Polynomial.constant(engine.field, 1, engine.zero.nx, engine.zero.nz)


def _det_adjb(A: PolyMatrix, pivot_rows: Sequence[int], pivot_cols: Sequence[int],
              b_col: int) -> Tuple[Polynomial, List[Polynomial]]:
    """det(A') and adj(A') b for the pivot submatrix A', b = A[rows, b_col]."""
    field, k = A.field, A.k
    r = len(pivot_rows)
    if r == 0:
        return Polynomial.constant(field, 1, 0, k), []
    profile = _dense_profile(A)
    cols = list(pivot_cols) + [b_col]
    if profile is not None:
        engine = _DenseEngine(field)
        mat = [[_dehomogenize(A.entries[i][j]) for j in cols] for i in pivot_rows]
    else:
        engine = _SparseEngine(field, 0, k)
        mat = [[None if A.entries[i][j].is_zero() else A.entries[i][j]
                for j in cols] for i in pivot_rows]
    pivots, sign, _ = engine.forward(mat, r, col_swap=False)
    if len(pivots) != r:
        raise ParameterError("pivot submatrix is singular; rank selection broke")
    det_entry, (x,) = _backsubstitute(engine, mat, r, sign, [r])
    if profile is not None:
        det = _rehomogenize(det_entry, field, k)
        adjb = [_rehomogenize(e, field, k) for e in x]
    else:
        zero = Polynomial.zero(field, 0, k)
        det = det_entry if det_entry is not None else zero
        adjb = [e if e is not None else zero for e in x]
    return det, adjb


def _fz_rank(A: PolyMatrix) -> int:
    """Rank over the fraction field F(z), by fraction-free elimination."""
    profile = _dense_profile(A)
    if profile is not None:
        engine = _DenseEngine(A.field)
        mat = [[_dehomogenize(e) for e in row] for row in A.entries]
    else:
        engine = _SparseEngine(A.field, 0, A.k)
        mat = _wrap_sparse(A.entries)
    pivots, _, _ = engine.forward(mat, A.cols, col_swap=True)
    return len(pivots)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

_FULL_SCAN_FALLBACK = 64  # points scanned before computing the F(z) rank


def max_rank_evaluation(A: PolyMatrix) -> MaxRankResult:
    """First hitting-set point where A attains its maximum (= F(z)) rank.

    Also returns pivot row/column sets of a rank-sized submatrix that is
    nonsingular at that point, selected by Gaussian elimination there.
    """
    H = hitting_set(A.max_entry_degree * A.rows, A.k, A.field)
    cap = min(A.rows, A.cols)
    best_rank = -1
    best_point = None
    r_star = None
    for idx, c in enumerate(H.points):
        rk = modlin.rank(A.evaluate(c), A.field)
        if rk > best_rank:
            best_rank, best_point = rk, c
        if best_rank == cap or (r_star is not None and best_rank == r_star):
            break
        if r_star is None and idx + 1 >= _FULL_SCAN_FALLBACK:
            r_star = _fz_rank(A)
            if best_rank == r_star:
                break
    pivot_rows, pivot_cols = _pivot_selection(A.evaluate(best_point), A.field)
    assert len(pivot_rows) == best_rank
    return MaxRankResult(best_point, best_rank, tuple(pivot_rows), tuple(pivot_cols))


def _pivot_selection(m: List[List[int]], field: PrimeField):
    """Row/column indices of a maximal nonsingular submatrix of an F_p matrix."""
    p = field.p
    a = [row[:] for row in m]
    rows, cols = len(a), len(a[0])
    row_idx = list(range(rows))
    pivot_rows, pivot_cols = [], []
    r = 0
    for c in range(cols):
        sel = next((i for i in range(r, rows) if a[i][c] % p), None)
        if sel is None:
            continue
        a[r], a[sel] = a[sel], a[r]
        row_idx[r], row_idx[sel] = row_idx[sel], row_idx[r]
        inv = field.inv(a[r][c])
        for i in range(r + 1, rows):
            if a[i][c]:
                f = (a[i][c] * inv) % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        pivot_rows.append(row_idx[r])
        pivot_cols.append(c)
        r += 1
        if r == rows:
            break
    # nonsingularity of the submatrix depends only on the index sets
    return sorted(pivot_rows), pivot_cols


def kernel_vector(A: PolyMatrix) -> List[Polynomial]:
    """A nonzero u in F_p[z]^t with A u = 0, entries of degree <= t m.

    Locates a maximal pivot submatrix A' via :func:`max_rank_evaluation`,
    then places the Cramer solution (adj(A') b, -det(A')) at the pivot and
    first dependent column positions.  The overall sign is chosen so the
    zero matrix yields a plain unit vector.
    """
    if A.rows > A.cols:
        raise ParameterError("kernel construction requires t' <= t")
    point, r, prows, pcols = max_rank_evaluation(A)
    if r == A.cols:
        raise ParameterError("matrix has full column rank; no kernel vector")
    pivot_col_set = set(pcols)
    b_col = next(j for j in range(A.cols) if j not in pivot_col_set)
    det, adjb = _det_adjb(A, prows, pcols, b_col)
    field, k = A.field, A.k
    u = [Polynomial.zero(field, 0, k) for _ in range(A.cols)]
    for i, col in enumerate(pcols):
        u[col] = -adjb[i]
    u[b_col] = det
    assert any(not e.is_zero() for e in u)
    if __debug__:
        for c in _debug_points(A):
            uc = [e.evaluate(z=c) if e.coeffs else 0 for e in u]
            for row in A.evaluate(c):
                assert sum(x * y for x, y in zip(row, uc)) % field.p == 0, \
                    "kernel vector fails at evaluation point"
    return u


def _debug_points(A: PolyMatrix):
    span = min(3, A.field.p)
    return [(v,) * A.k for v in range(1, span + 1)]


def det_and_adjugate(A: PolyMatrix) -> Tuple[Polynomial, PolyMatrix]:
    """Exact determinant and adjugate by fraction-free elimination.

    For nonsingular input the adjugate columns come out of fraction-free
    back substitution on the augmented identity; a singular matrix falls
    back to cofactor minors.  ``adj(A) A = det(A) I`` is re-verified on
    small instances when assertions are enabled.
    """
    if A.rows != A.cols:
        raise ParameterError("det_and_adjugate expects a square matrix")
    n = A.rows
    field, k = A.field, A.k
    zero = Polynomial.zero(field, 0, k)
    one = Polynomial.constant(field, 1, 0, k)
    engine = _SparseEngine(field, 0, k)
    mat = [[None if A.entries[i][j].is_zero() else A.entries[i][j]
            for j in range(n)] for i in range(n)]
    ident = [[one if i == j else None for j in range(n)] for i in range(n)]
    aug = [mrow + irow for mrow, irow in zip(mat, ident)]
    pivots, sign, _ = engine.forward(aug, n, col_swap=False)
    if len(pivots) == n:
        det_entry, cols = _backsubstitute(engine, aug, n, sign, list(range(n, 2 * n)))
        det = det_entry if det_entry is not None else zero
        adj_entries = [[cols[j][i] if cols[j][i] is not None else zero
                        for j in range(n)] for i in range(n)]
    else:
        det = zero
        adj_entries = [[_cofactor(A, j, i) for j in range(n)] for i in range(n)]
    adj = PolyMatrix(adj_entries)
    if __debug__ and n <= 6:
        prod = [adj.apply([A.entries[i][j] for i in range(n)]) for j in range(n)]
        for i in range(n):
            for j in range(n):
                expect = det if i == j else zero
                assert prod[j][i] == expect, "adjugate identity failed"
    return det, adj


def _cofactor(A: PolyMatrix, i: int, j: int) -> Polynomial:
    n = A.rows
    if n == 1:
        return Polynomial.constant(A.field, 1, 0, A.k)
    rows = [r for r in range(n) if r != i]
    cols = [c for c in range(n) if c != j]
    minor = _det(A.submatrix(rows, cols))
    return minor if (i + j) % 2 == 0 else -minor


def _det(A: PolyMatrix) -> Polynomial:
    return poly_det(A.entries)


def poly_det(entries: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Determinant of a square grid of same-block polynomials.

    Fraction-free elimination on the entries; works for any variable block
    (the Wronskian machinery uses it over F_p[x]).
    """
    n = len(entries)
    if n == 0 or any(len(row) != n for row in entries):
        raise ParameterError("poly_det expects a square entry grid")
    first = entries[0][0]
    field, nx, nz = first.field, first.nx, first.nz
    for row in entries:
        for e in row:
            if e.nx != nx or e.nz != nz or e.field.p != field.p:
                raise ParameterError("entries must share one block and field")
    engine = _SparseEngine(field, nx, nz)
    mat = _wrap_sparse(entries)
    pivots, sign, _ = engine.forward(mat, n, col_swap=False)
    zero = Polynomial.zero(field, nx, nz)
    if len(pivots) < n:
        return zero
    det = mat[n - 1][n - 1]
    if det is None:
        return zero
    return det if sign > 0 else -det
