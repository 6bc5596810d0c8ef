"""List decoder for multiplicity codes on grids.

Pipeline: (1) interpolate a y-linear explanation Q = Q_1 y_1 + ... + Q_m y_m
with coefficients in F_p[z] by solving a homogeneous linear system over the
polynomial ring; (2) every message whose encoding agrees with the received
word on more than (D+d)|S|^(k-1)/(s-m) points satisfies
``sum_i Q_i * Delta_{i-1}(f) == 0`` identically, because at each agreement
point that combination vanishes to order s-m and the multiplicity
Schwartz-Zippel bound kills it; (3) the solutions of that equation form a
linear space of dimension at most C(m+k, k), reconstructed one homogeneous
component at a time and then filtered exactly.

The reconstruction lifts each seed (coefficients of the monomials of degree
at most j, where j indexes the top nonzero Q_j) through a linear map; the
final filter intersects the lifted span with the kernel of f -> R(f), so
every returned member satisfies the equation exactly and no solution is
lost.  Spurious lifts from inconsistent seeds are removed by that same
filter, never by ad-hoc checks inside the lift.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import modlin
from .code import CodeParams, ReceivedWord, agreement, encode
from .errors import (EnumerationLimitError, FieldTooSmallError,
                     InfeasibleThresholdError, ParameterError)
from .poly import (Polynomial, delta, dominated_exponents, euler_lift,
                   exponents_of_degree, exponents_up_to, exp_sub,
                   multi_binomial, tau)
from .polyring_linalg import PolyMatrix, hitting_set, kernel_vector

DEFAULT_DIMENSION_CAP = 12
DEFAULT_MEMBER_ENUMERATION = 200_000


@dataclass(frozen=True)
class DecoderParams:
    """Number of glued symbols used (m) and the x-degree bound D of each Q_i."""

    m: int
    D: int


def nominal_constraint_count(params: CodeParams, m: int) -> int:
    """|S|^k * C(s-m+k, k), the constraint count used to size D."""
    return params.npoints * math.comb(params.s - m + params.k, params.k)


def unknown_count(params: CodeParams, dp: DecoderParams) -> int:
    """m * C(D+k, k), the number of interpolation unknowns."""
    return dp.m * math.comb(dp.D + params.k, params.k)


def choose_params(params: CodeParams, m: int) -> DecoderParams:
    """Smallest D with more unknowns than constraints.

    Feasibility of the closed form 10|S|(s-m)/m^(1/k) guarantees such a D
    exists; minimality keeps desk-scale instances tractable while the
    kernel-existence argument carries over verbatim.
    """
    s, k = params.s, params.k
    if not 1 <= m <= s - 1 - k:
        raise ParameterError(f"need 1 <= m <= s-1-k = {s - 1 - k}, got m={m}")
    constraints = nominal_constraint_count(params, m)
    D = 0
    while m * math.comb(D + k, k) <= constraints:
        D += 1
    # never worse than the closed-form sufficient value ceil(10|S|(s-m)/m^(1/k))
    size = params.grid.size
    assert D == 0 or (D - 1) ** k * m < (10 * size * (s - m)) ** k
    return DecoderParams(m=m, D=D)


def agreement_threshold(params: CodeParams, dp: DecoderParams) -> Fraction:
    """Agreement fraction that must be strictly exceeded for the vanishing step."""
    return Fraction((dp.D + params.d) * params.grid.size ** (params.k - 1),
                    (params.s - dp.m) * params.npoints)


class Interpolant:
    """A nonzero tuple (Q_1, ..., Q_m) of (x, z)-block polynomials."""

    __slots__ = ("qs",)

    def __init__(self, qs: Sequence[Polynomial]):
        if not qs:
            raise ParameterError("interpolant needs at least one component")
        if all(q.is_zero() for q in qs):
            raise ParameterError("interpolant must not be identically zero")
        self.qs = tuple(qs)

    @property
    def m(self) -> int:
        return len(self.qs)

    def x_degrees(self) -> Tuple[int, ...]:
        return tuple(q.x_degree() for q in self.qs)

    def z_degrees(self) -> Tuple[int, ...]:
        return tuple(q.z_degree() for q in self.qs)


def interpolate(P: ReceivedWord, dp: DecoderParams) -> Interpolant:
    """Solve the derivative-weighted constraints for a nonzero Q over F_p[z].

    One homogeneous constraint per grid point a and exponent e with
    |e| <= s-1-m: the entry multiplying the coefficient of x^alpha in Q_i
    is  sum over e' <= e of C(alpha, e') a^(alpha-e') tau_{e-e'}^{(i-1)}(P(a)),
    a z-polynomial of degree i-1.  A kernel vector of the stacked matrix
    yields the coefficient vectors of the Q_i.
    """
    params = P.params
    field, k, s = params.field, params.k, params.s
    m, D = dp.m, dp.D
    if not 1 <= m <= s - 1 - k:
        raise ParameterError("decoder parameters do not fit the code")
    p = field.p

    col_exps = exponents_up_to(k, D)
    n_cols = m * len(col_exps)
    row_exps = exponents_up_to(k, s - 1 - m)
    points = params.grid.all_points()
    if n_cols <= len(points) * len(row_exps):
        raise ParameterError("interpolation system is not underdetermined")

    rows: List[List[Polynomial]] = []
    zero_z = Polynomial.zero(field, 0, k)
    for a in points:
        glued = P.glued_at(a)
        # tau_{g}^{(i-1)}(P(a)) for every order i-1 < m and |g| <= s-1-m
        taus = [{g: tau(glued, g, order) for g in row_exps}
                for order in range(m)]
        # powers of the point coordinates, for a^(alpha - e')
        powers = [[pow(c, t, p) for t in range(D + 1)] for c in a]
        for e in row_exps:
            row: List[Polynomial] = []
            for i in range(1, m + 1):
                tau_row = taus[i - 1]
                for alpha in col_exps:
                    acc: Dict = {}
                    for e2 in dominated_exponents(e):
                        diff = exp_sub(alpha, e2)
                        if diff is None:
                            continue
                        w = multi_binomial(field, alpha, e2)
                        if not w:
                            continue
                        for c, t in zip(powers, diff):
                            w = (w * c[t]) % p
                        if not w:
                            continue
                        g = exp_sub(e, e2)
                        for (_, ze), cv in tau_row[g].coeffs.items():
                            v = (acc.get(ze, 0) + w * cv) % p
                            if v:
                                acc[ze] = v
                            elif ze in acc:
                                del acc[ze]
                    if acc:
                        row.append(Polynomial.z_poly(field, k, acc))
                    else:
                        row.append(zero_z)
            rows.append(row)
    matrix = PolyMatrix(rows)
    u = kernel_vector(matrix)

    qs = []
    for i in range(m):
        coeffs: Dict = {}
        for ci, alpha in enumerate(col_exps):
            entry = u[i * len(col_exps) + ci]
            for (_, ze), c in entry.coeffs.items():
                coeffs[(alpha, ze)] = c
        qs.append(Polynomial.xz_poly(field, k, k, coeffs))
    return Interpolant(qs)


def vanishing_check(Q: Interpolant, f: Polynomial) -> bool:
    """True iff sum_i Q_i * Delta_{i-1}(f) is the zero polynomial in x and z."""
    return _residual(Q, f).is_zero()


def _residual(Q: Interpolant, f: Polynomial) -> Polynomial:
    field = f.field
    k = f.nx
    acc = Polynomial.zero(field, k, k)
    for i, qi in enumerate(Q.qs):
        if qi.is_zero():
            continue
        di = delta(f, i)
        if di.is_zero():
            continue
        acc = acc + qi * di
    return acc


class SolutionSpace:
    """Affine space offset + span(basis) of degree <= d candidate messages."""

    __slots__ = ("offset", "basis")

    def __init__(self, offset: Polynomial, basis: Sequence[Polynomial]):
        self.offset = offset
        self.basis = tuple(basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def member_count(self, p: int) -> int:
        return p ** self.dim

    def members(self) -> Iterator[Polynomial]:
        """All members, in row-major order over basis coefficients."""
        p = self.offset.field.p
        for combo in itertools.product(range(p), repeat=self.dim):
            f = self.offset
            for c, b in zip(combo, self.basis):
                if c:
                    f = f + b.scale(c)
            yield f

    def coordinates(self, f: Polynomial) -> Optional[List[int]]:
        """Basis coordinates of f - offset, or None when f is not a member."""
        target = f - self.offset
        keys = sorted({k for b in self.basis for k in b.coeffs}
                      | set(target.coeffs))
        if not self.basis:
            return [] if target.is_zero() else None
        matrix = [[b.coeffs.get(key, 0) for b in self.basis] for key in keys]
        rhs = [target.coeffs.get(key, 0) for key in keys]
        sol, kdim = modlin.solve(matrix, rhs, self.offset.field)
        if sol is None:
            return None
        assert kdim == 0, "solution-space basis is not independent"
        return sol


def solve_equation_subspace(Q: Interpolant, d: int) -> SolutionSpace:
    """The space of all degree <= d solutions of sum Q_i Delta_{i-1}(f) = 0.

    Works with the largest index j with Q_j nonzero, translates x so that
    Q_j is nonvanishing at the origin as a z-polynomial, lifts every seed
    (monomial coefficients of degree <= j) one homogeneous component at a
    time via the glued-derivative extraction and Euler recovery, and
    finally intersects the lifted span with the exact kernel of the
    residual map.  The returned space therefore contains exactly the
    solutions, with zero offset (the equation is homogeneous in f).
    """
    qs = Q.qs
    field = qs[0].field
    k = qs[0].nx
    p = field.p
    if p <= d:
        raise ParameterError(f"need p > d for reconstruction; got p={p}, d={d}")

    j = max(i + 1 for i, q in enumerate(qs) if not q.is_zero())
    qj = qs[j - 1]

    # translation point with Q_j(a) nonzero as a z-polynomial
    side = qj.x_degree() + 1
    if side > p:
        raise FieldTooSmallError(
            f"finding a nonvanishing point needs a grid of side {side} > p = {p}")
    a = None
    for cand in itertools.product(range(side), repeat=k):
        val = qj.evaluate(x=cand)
        if isinstance(val, Polynomial):
            if not val.is_zero():
                a = cand
                break
        elif val != 0:
            a = cand
            break
    assert a is not None, "nonzero polynomial vanished on a full grid"

    shifted = [qs[i].shift_x(a) for i in range(j)]
    q0 = shifted[j - 1].evaluate(x=(0,) * k)
    if not isinstance(q0, Polynomial):
        q0 = Polynomial.constant(field, q0, 0, k)
    assert not q0.is_zero()

    seed_deg = min(j, d)
    seed_exps = exponents_up_to(k, seed_deg)

    extractor = _DerivativeExtractor(shifted, q0, j, field, k) if d > j else None

    generators: List[Polynomial] = []
    for e in seed_exps:
        seed = Polynomial.x_monomial(field, k, e)
        lifted = _lift(seed, shifted, q0, j, d, extractor, field, k)
        generators.append(lifted.shift_x(tuple((-v) % p for v in a)))

    # exact filter: intersect span(generators) with ker(f -> residual)
    residuals = [_residual(Q, g) for g in generators]
    keys = sorted({key for r in residuals for key in r.coeffs})
    if keys:
        matrix = [[r.coeffs.get(key, 0) for r in residuals] for key in keys]
        coeff_kernel = modlin.kernel_basis(matrix, field)
    else:
        coeff_kernel = [[1 if i == t else 0 for i in range(len(generators))]
                        for t in range(len(generators))]
    solutions = []
    for vec in coeff_kernel:
        h = Polynomial.zero(field, k)
        for c, g in zip(vec, generators):
            if c:
                h = h + g.scale(c)
        solutions.append(h)
    basis = _independent_basis(solutions, field)
    assert len(basis) <= math.comb(j + k, k), "subspace dimension bound violated"
    return SolutionSpace(Polynomial.zero(field, k), basis)


class _DerivativeExtractor:
    """Recovers the order-(j-1) derivative family from q0 * Delta_{j-1}(g).

    The polynomials q0 * z^e for |e| = j-1 are linearly independent of
    degree at most Gamma + j - 1, so their evaluations on a hitting set of
    that degree have full rank; a fixed inverse of a full-rank square
    subsystem turns each stage into the same linear map.
    """

    def __init__(self, shifted_qs, q0, j, field, k):
        gamma = max(q.z_degree() for q in shifted_qs)
        self.exps = exponents_of_degree(k, j - 1)
        n = len(self.exps)
        H = hitting_set(gamma + j - 1, k, field)
        rows = []
        for b in H.points:
            q0b = q0.evaluate(z=b)
            rows.append([(q0b * _power(b, e, field.p)) % field.p for e in self.exps])
        idx = modlin.select_independent_rows(rows, field, n)
        self.points = [H.points[i] for i in idx]
        self.minv = modlin.invert([rows[i] for i in idx], field)
        self.field = field
        self.k = k

    def extract(self, B: Polynomial) -> Dict[Tuple[int, ...], Polynomial]:
        """Split B = q0 * sum_e z^e D_e(x) into the family {e: D_e}."""
        evals = [B.evaluate(z=b) if B.coeffs else Polynomial.zero(self.field, self.k)
                 for b in self.points]
        out = {}
        for r, e in enumerate(self.exps):
            acc = Polynomial.zero(self.field, self.k)
            for w, pol in zip(self.minv[r], evals):
                if w and not pol.is_zero():
                    acc = acc + pol.scale(w)
            out[e] = acc
        return out


def _power(point, e, p: int) -> int:
    out = 1
    for c, t in zip(point, e):
        if t:
            out = (out * pow(c, t, p)) % p
    return out


def _lift(seed: Polynomial, shifted_qs, q0, j: int, d: int,
          extractor: Optional[_DerivativeExtractor],
          field, k) -> Polynomial:
    """Extend a degree <= j seed to degree d through the modular identities.

    At stage t the x-homogeneous degree t-j+2 part of
    sum_i Q'_i Delta_{i-1}(f_{<=t}) equals -q0 * Delta_{j-1}(f_{t+1});
    extraction plus Euler recovery yields the next component.  Purely
    linear in the seed, so spurious lifts are filtered exactly later.
    """
    f = seed
    for t in range(j, d):
        G = Polynomial.zero(field, k, k)
        for i in range(1, j + 1):
            qi = shifted_qs[i - 1]
            if qi.is_zero():
                continue
            di = delta(f, i - 1)
            if di.is_zero():
                continue
            G = G + qi * di
        B = -G.x_component(t - j + 2)
        derivs = extractor.extract(B)
        comp = euler_lift(derivs, t + 1, field, k)
        if not comp.is_zero():
            f = f + comp
    return f


def _independent_basis(polys: Sequence[Polynomial], field) -> List[Polynomial]:
    """Reduce a list of polynomials to a linearly independent basis."""
    basis: List[Polynomial] = []
    table: Dict = {}
    for g in polys:
        h = g
        while not h.is_zero():
            lead = max(h.coeffs, key=lambda key: (sum(key[0]) + sum(key[1]),
                                                  key[0] + key[1]))
            if lead not in table:
                break
            other = table[lead]
            factor = (h.coeffs[lead] * field.inv(other.coeffs[lead])) % field.p
            h = h - other.scale(factor)
        if not h.is_zero():
            table[lead] = h
            basis.append(h)
    return basis


@dataclass
class DecodeDetails:
    """Run statistics surfaced by the CLI."""

    decoder_params: DecoderParams
    threshold: Fraction
    subspace_dim: int
    interpolant_x_degrees: Tuple[int, ...]
    interpolant_z_degrees: Tuple[int, ...]
    strategy: str
    agreements: Tuple[Fraction, ...]


def list_decode(P: ReceivedWord, m: int, min_agreement, *,
                dim_cap: int = DEFAULT_DIMENSION_CAP,
                max_enumeration: int = DEFAULT_MEMBER_ENUMERATION,
                prune_config=None) -> List[Polynomial]:
    """All degree <= d messages with the requested agreement with P."""
    return list_decode_with_details(
        P, m, min_agreement, dim_cap=dim_cap, max_enumeration=max_enumeration,
        prune_config=prune_config)[0]


def list_decode_with_details(P: ReceivedWord, m: int, min_agreement, *,
                             dim_cap: int = DEFAULT_DIMENSION_CAP,
                             max_enumeration: int = DEFAULT_MEMBER_ENUMERATION,
                             prune_config=None
                             ) -> Tuple[List[Polynomial], DecodeDetails]:
    params = P.params
    threshold = Fraction(min_agreement)
    if threshold > 1:
        raise ParameterError("agreement threshold cannot exceed 1")
    dp = choose_params(params, m)
    bound = agreement_threshold(params, dp)
    if not threshold > bound:
        raise InfeasibleThresholdError(
            f"min agreement {threshold} does not exceed the vanishing bound "
            f"{bound} = (D+d)|S|^(k-1)/((s-m)|S|^k) with D={dp.D}; "
            f"thresholds at or below the distance bound d/(s|S|) = "
            f"{Fraction(params.d, params.s * params.grid.size)} admit "
            f"super-polynomially many codewords and are never decodable",
            bound=bound)

    Q = interpolate(P, dp)
    W = solve_equation_subspace(Q, params.d)
    assert W.dim <= math.comb(m + params.k, params.k), \
        "solution space exceeds the C(m+k, k) dimension bound"

    if W.dim <= dim_cap and W.member_count(params.field.p) <= max_enumeration:
        strategy = "enumerate"
        candidates = _filter_close_members(P, W, threshold)
    elif prune_config is not None:
        from . import pruning  # deferred: pruning builds on this module's types
        strategy = "prune"
        cfg = prune_config
        candidates = [f for f in pruning.prune(P, W, cfg)
                      if agreement(encode(f, params), P) >= threshold]
    else:
        raise EnumerationLimitError(
            f"subspace of dimension {W.dim} over F_{params.field.p} is too "
            f"large to enumerate (cap {dim_cap} / {max_enumeration} members) "
            f"and pruning is not enabled")

    candidates = _dedupe_sorted(candidates)
    details = DecodeDetails(
        decoder_params=dp,
        threshold=bound,
        subspace_dim=W.dim,
        interpolant_x_degrees=Q.x_degrees(),
        interpolant_z_degrees=Q.z_degrees(),
        strategy=strategy,
        agreements=tuple(agreement(encode(f, params), P) for f in candidates),
    )
    return candidates, details


def _filter_close_members(P: ReceivedWord, W: SolutionSpace, threshold: Fraction
                          ) -> List[Polynomial]:
    """Members of W with the requested agreement, by batched evaluation."""
    params = P.params
    p = params.field.p
    pts = params.grid.all_points()
    ne = params.alphabet_size
    if W.dim == 0:
        f = W.offset
        return [f] if agreement(encode(f, params), P) >= threshold else []

    offset_word = encode(W.offset, params)
    offset_vec = np.array([v for pt in pts for v in offset_word.symbols[pt]],
                          dtype=np.int64)
    basis_rows = []
    for b in W.basis:
        word = encode(b, params)
        basis_rows.append([v for pt in pts for v in word.symbols[pt]])
    V = np.array(basis_rows, dtype=np.int64)
    target = np.array([v for pt in pts for v in P.symbols[pt]],
                      dtype=np.int64).reshape(len(pts), ne)
    needed_num = threshold.numerator * len(pts)
    den = threshold.denominator

    out: List[Polynomial] = []
    batch: List[Tuple[int, ...]] = []

    def flush():
        if not batch:
            return
        C = np.array(batch, dtype=np.int64)
        Wv = (C @ V + offset_vec[None, :]) % p
        eq = (Wv.reshape(len(batch), len(pts), ne) == target[None]).all(axis=2)
        counts = eq.sum(axis=1)
        for combo, cnt in zip(batch, counts):
            if int(cnt) * den >= needed_num:
                f = W.offset
                for c, b in zip(combo, W.basis):
                    if c:
                        f = f + b.scale(c)
                out.append(f)
        batch.clear()

    for combo in itertools.product(range(p), repeat=W.dim):
        batch.append(combo)
        if len(batch) == 4096:
            flush()
    flush()
    return out


def _dedupe_sorted(polys: Sequence[Polynomial]) -> List[Polynomial]:
    seen = {}
    for f in polys:
        seen[f.sort_key()] = f
    return [seen[key] for key in sorted(seen)]
