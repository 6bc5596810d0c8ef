"""Dense exact linear algebra over F_p on small matrices.

Matrices are lists of row lists of residues.  Everything here is plain
Gaussian elimination mod p; sizes stay desk-scale so no pivoting strategy
beyond first-nonzero is needed.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .field import PrimeField


def _copy(m: Sequence[Sequence[int]], p: int) -> List[List[int]]:
    return [[v % p for v in row] for row in m]


def row_reduce(m: Sequence[Sequence[int]], field: PrimeField
               ) -> Tuple[List[List[int]], List[int]]:
    """Reduced row echelon form and the pivot column list."""
    p = field.p
    a = _copy(m, p)
    rows = len(a)
    cols = len(a[0]) if rows else 0
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        sel = next((i for i in range(r, rows) if a[i][c]), None)
        if sel is None:
            continue
        a[r], a[sel] = a[sel], a[r]
        inv = field.inv(a[r][c])
        a[r] = [(v * inv) % p for v in a[r]]
        for i in range(rows):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: Sequence[Sequence[int]], field: PrimeField) -> int:
    if not m or not m[0]:
        return 0
    return len(row_reduce(m, field)[1])


def kernel_basis(m: Sequence[Sequence[int]], field: PrimeField
                 ) -> List[List[int]]:
    """Basis of {v : m v = 0}; m given row-wise with ncols unknowns."""
    if not m:
        raise ValueError("kernel_basis needs the column count; pass a nonempty matrix")
    p = field.p
    cols = len(m[0])
    red, pivots = row_reduce(m, field)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * cols
        v[fc] = 1
        for r, pc in enumerate(pivots):
            v[pc] = (-red[r][fc]) % p
        basis.append(v)
    return basis


def solve(m: Sequence[Sequence[int]], b: Sequence[int], field: PrimeField
          ) -> Tuple[Optional[List[int]], int]:
    """Solve m x = b.

    Returns ``(solution, kernel_dim)``: the solution is None when the
    system is inconsistent; ``kernel_dim`` is the homogeneous solution
    dimension (0 means the returned solution is unique).
    """
    p = field.p
    rows = len(m)
    cols = len(m[0]) if rows else 0
    aug = [[v % p for v in row] + [b[i] % p] for i, row in enumerate(m)]
    red, pivots = row_reduce(aug, field)
    if cols in pivots:
        return None, cols - (len(pivots) - 1)
    x = [0] * cols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][cols]
    return x, cols - len(pivots)


def select_independent_rows(m: Sequence[Sequence[int]], field: PrimeField,
                            need: int) -> List[int]:
    """Indices of the first ``need`` rows forming a full-rank submatrix.

    Greedy in row order, so deterministic.  Raises if the matrix has rank
    below ``need``.
    """
    chosen: List[int] = []
    staged: List[List[int]] = []
    for idx, row in enumerate(m):
        trial = staged + [list(row)]
        if rank(trial, field) == len(trial):
            staged = trial
            chosen.append(idx)
            if len(chosen) == need:
                return chosen
    raise ValueError(f"matrix rank below {need}")


def invert(m: Sequence[Sequence[int]], field: PrimeField) -> List[List[int]]:
    """Inverse of a square nonsingular matrix over F_p."""
    p = field.p
    n = len(m)
    aug = [[v % p for v in row] + [1 if i == j else 0 for j in range(n)]
           for i, row in enumerate(m)]
    red, pivots = row_reduce(aug, field)
    if pivots != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in red]


def mat_vec(m: Sequence[Sequence[int]], v: Sequence[int], field: PrimeField
            ) -> List[int]:
    p = field.p
    return [sum(a * b for a, b in zip(row, v)) % p for row in m]
