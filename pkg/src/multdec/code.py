"""The multiplicity code on a grid: parameters, encoder, channel, oracles.

A codeword symbol at a grid point is the full tuple of Hasse derivatives
of order below s, indexed by exponents in graded-lex order -- that
ordering is part of the wire format.  The alphabet therefore has
``C(s+k-1, k)`` coordinates per point and the relative distance is
``1 - d/(s|S|)``.

The corruption channel flips whole grid-point symbols (never partial
tuples) using the seeded xorshift64* generator from :mod:`multdec.rng`,
so corrupted instances are reproducible across implementations.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import EnumerationLimitError, ParameterError
from .field import PrimeField
from .poly import (Grid, Polynomial, exponents_up_to, grlex_key)
from .rng import XorShift64Star

WORD_FORMAT_VERSION = 1


class CodeParams:
    """Parameters (k, s, d, S, p) of one multiplicity code instance."""

    __slots__ = ("field", "k", "s", "d", "grid", "exps", "exp_index")

    def __init__(self, field: PrimeField, k: int, s: int, d: int, grid: Grid):
        if k < 1 or s < 1 or d < 0:
            raise ParameterError("need k >= 1, s >= 1, d >= 0")
        if grid.k != k or grid.field.p != field.p:
            raise ParameterError("grid does not match the code parameters")
        if not d < s * grid.size:
            raise ParameterError(
                f"need d < s*|S| for positive distance; got d={d}, s*|S|={s * grid.size}")
        if not field.p > d:
            raise ParameterError(f"need field characteristic p > d; got p={field.p}, d={d}")
        self.field = field
        self.k = k
        self.s = s
        self.d = d
        self.grid = grid
        self.exps = exponents_up_to(k, s - 1)  # E in graded-lex order
        self.exp_index = {e: i for i, e in enumerate(self.exps)}
        assert len(self.exps) == math.comb(s + k - 1, k)

    @property
    def alphabet_size(self) -> int:
        return len(self.exps)

    @property
    def npoints(self) -> int:
        return self.grid.npoints

    @property
    def relative_distance(self) -> Fraction:
        return 1 - Fraction(self.d, self.s * self.grid.size)

    def __eq__(self, other) -> bool:
        return (isinstance(other, CodeParams) and other.field.p == self.field.p
                and (other.k, other.s, other.d) == (self.k, self.s, self.d)
                and other.grid == self.grid)

    def __repr__(self) -> str:
        return (f"CodeParams(p={self.field.p}, k={self.k}, s={self.s}, d={self.d}, "
                f"S={list(self.grid.points)})")


class ReceivedWord:
    """A function from grid points to derivative tuples."""

    __slots__ = ("params", "symbols")

    def __init__(self, params: CodeParams, symbols: Mapping[Tuple[int, ...], Sequence[int]]):
        pts = params.grid.all_points()
        if set(symbols) != set(pts):
            raise ParameterError("symbols must cover exactly the grid points")
        p = params.field.p
        ne = params.alphabet_size
        clean: Dict[Tuple[int, ...], Tuple[int, ...]] = {}
        for pt in pts:
            vals = tuple(int(v) % p for v in symbols[pt])
            if len(vals) != ne:
                raise ParameterError(
                    f"symbol at {pt} has {len(vals)} values, expected {ne}")
            clean[pt] = vals
        self.params = params
        self.symbols = clean

    def tuple_at(self, point: Tuple[int, ...]) -> Tuple[int, ...]:
        return self.symbols[point]

    def glued_at(self, point: Tuple[int, ...]) -> Tuple[Polynomial, ...]:
        """The symbol as the tuple (P_0, ..., P_{s-1}) of glued z-polynomials."""
        params = self.params
        vals = self.symbols[point]
        field, k, s = params.field, params.k, params.s
        per_order: List[Dict] = [dict() for _ in range(s)]
        for e, v in zip(params.exps, vals):
            if v:
                per_order[sum(e)][e] = v
        return tuple(Polynomial.z_poly(field, k, per_order[j]) for j in range(s))

    def __eq__(self, other) -> bool:
        return (isinstance(other, ReceivedWord) and other.params == self.params
                and other.symbols == self.symbols)


def encode(f: Polynomial, params: CodeParams) -> ReceivedWord:
    """Evaluate all Hasse derivatives of order < s at every grid point."""
    if f.nz or f.nx != params.k or f.field.p != params.field.p:
        raise ParameterError("message must be an x-block polynomial matching the code")
    if f.degree() > params.d:
        raise ParameterError(f"message degree {f.degree()} exceeds d={params.d}")
    derivs = [f.hasse_x(e) for e in params.exps]
    symbols = {}
    for pt in params.grid.iter_points():
        symbols[pt] = tuple(g.evaluate(x=pt) if g.coeffs else 0 for g in derivs)
    return ReceivedWord(params, symbols)


def agreement(w1: ReceivedWord, w2: ReceivedWord) -> Fraction:
    """Fraction of grid points where the full symbol tuples coincide."""
    if w1.params != w2.params:
        raise ParameterError("agreement between words of different codes")
    pts = w1.params.grid.all_points()
    matches = sum(1 for pt in pts if w1.symbols[pt] == w2.symbols[pt])
    return Fraction(matches, len(pts))


def corrupt(w: ReceivedWord, error_fraction, rng_seed: int) -> ReceivedWord:
    """Replace exactly floor(error_fraction * |S|^k) symbols with random ones.

    Points are chosen without replacement; each chosen tuple is redrawn
    until it differs from the original.  Deterministic for a fixed seed.
    """
    frac = Fraction(error_fraction)
    if frac < 0 or frac > 1:
        raise ParameterError("error fraction must lie in [0, 1]")
    params = w.params
    pts = params.grid.all_points()
    n_bad = math.floor(frac * len(pts))
    rng = XorShift64Star(rng_seed)
    chosen = rng.sample_without_replacement(len(pts), n_bad)
    p = params.field.p
    ne = params.alphabet_size
    symbols = dict(w.symbols)
    for idx in chosen:
        pt = pts[idx]
        old = symbols[pt]
        while True:
            new = tuple(rng.randbelow(p) for _ in range(ne))
            if new != old:
                break
        symbols[pt] = new
    return ReceivedWord(params, symbols)


def min_weight_family(params: CodeParams, T: Sequence[int]) -> Polynomial:
    """The minimum-weight codeword (x1 - b)^(s-1) product over b in T.

    Requires s | d and |T| = d/s with T inside S; the encoding agrees with
    the zero codeword exactly on the points whose first coordinate lies in
    T, a d/(s|S|) fraction.
    """
    s, d = params.s, params.d
    if d % s != 0:
        raise ParameterError(f"s={s} must divide d={d}")
    tset = tuple(int(b) % params.field.p for b in T)
    if len(set(tset)) != len(tset):
        raise ParameterError("T must have distinct members")
    if len(tset) != d // s:
        raise ParameterError(f"|T| must equal d/s = {d // s}")
    if not set(tset) <= set(params.grid.points):
        raise ParameterError("T must be a subset of S")
    field, k = params.field, params.k
    f = Polynomial.constant(field, 1, k)
    e1 = tuple(1 if i == 0 else 0 for i in range(k))
    for b in tset:
        factor = Polynomial.x_poly(field, k, {e1: 1, (0,) * k: -b})
        f = f * factor ** (s - 1)
    return f


DEFAULT_ENUMERATION_LIMIT = 2_000_000
_ORACLE_BATCH = 4096


def exhaustive_codeword_oracle(w: ReceivedWord, min_agreement,
                               max_candidates: int = DEFAULT_ENUMERATION_LIMIT
                               ) -> List[Polynomial]:
    """All degree <= d polynomials whose encoding is min_agreement-close to w.

    Brute-force ground truth for decoder tests: enumerates every message
    (p to the C(d+k, k)), so it is guarded by ``max_candidates``.
    Returns the list sorted by the canonical polynomial key.
    """
    params = w.params
    p = params.field.p
    exps = exponents_up_to(params.k, params.d)
    nmon = len(exps)
    total = p ** nmon
    if total > max_candidates:
        raise EnumerationLimitError(
            f"{total} candidate messages exceed the enumeration guard {max_candidates}")
    threshold = Fraction(min_agreement)
    pts = params.grid.all_points()
    ne = params.alphabet_size

    basis_rows = []
    for e in exps:
        word = encode(Polynomial.x_monomial(params.field, params.k, e), params)
        basis_rows.append([v for pt in pts for v in word.symbols[pt]])
    V = np.array(basis_rows, dtype=np.int64)  # nmon x (npoints * ne)
    target = np.array([v for pt in pts for v in w.symbols[pt]],
                      dtype=np.int64).reshape(len(pts), ne)

    found: List[Polynomial] = []
    needed_num = threshold.numerator * len(pts)
    den = threshold.denominator
    batch: List[Tuple[int, ...]] = []

    def flush():
        if not batch:
            return
        C = np.array(batch, dtype=np.int64)
        W = (C @ V) % p
        eq = (W.reshape(len(batch), len(pts), ne) == target[None]).all(axis=2)
        counts = eq.sum(axis=1)
        for row, cnt in zip(batch, counts):
            if int(cnt) * den >= needed_num:
                coeffs = {e: c for e, c in zip(exps, row) if c}
                found.append(Polynomial.x_poly(params.field, params.k, coeffs))
        batch.clear()

    for combo in itertools.product(range(p), repeat=nmon):
        batch.append(combo)
        if len(batch) == _ORACLE_BATCH:
            flush()
    flush()
    found.sort(key=lambda g: g.sort_key())
    return found


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------

def received_word_to_json(w: ReceivedWord) -> dict:
    params = w.params
    return {
        "format": WORD_FORMAT_VERSION,
        "p": params.field.p,
        "k": params.k,
        "s": params.s,
        "d": params.d,
        "S": list(params.grid.points),
        "symbols": [
            {"point": list(pt), "values": list(w.symbols[pt])}
            for pt in params.grid.all_points()
        ],
    }


def received_word_from_json(obj: dict) -> ReceivedWord:
    if not isinstance(obj, dict):
        raise ParameterError("received word file must hold a JSON object")
    if obj.get("format") != WORD_FORMAT_VERSION:
        raise ParameterError(
            f"unsupported received-word format {obj.get('format')!r}, "
            f"expected {WORD_FORMAT_VERSION}")
    for key in ("p", "k", "s", "d", "S", "symbols"):
        if key not in obj:
            raise ParameterError(f"received word file missing field {key!r}")
    field = PrimeField(int(obj["p"]))
    k = int(obj["k"])
    grid = Grid(field, [int(v) for v in obj["S"]], k)
    params = CodeParams(field, k, int(obj["s"]), int(obj["d"]), grid)
    symbols = {}
    for entry in obj["symbols"]:
        pt = tuple(int(v) % field.p for v in entry["point"])
        if pt in symbols:
            raise ParameterError(f"duplicate symbol for point {pt}")
        symbols[pt] = [int(v) for v in entry["values"]]
    return ReceivedWord(params, symbols)
