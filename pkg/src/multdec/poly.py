"""Sparse multivariate polynomial arithmetic over F_p with Hasse calculus.

A :class:`Polynomial` lives over a declared variable block: an x-block of
``nx`` variables, a z-block of ``nz`` variables, or both.  Coefficients are
stored sparsely as ``{(x_exponent, z_exponent): residue}`` with zero
coefficients pruned, so equality is a direct comparison of canonical forms.

The single monomial order used everywhere is graded lexicographic: lower
total degree first, then lexicographic with the earlier index more
significant.  Derivative tuples, serialization and term-division all use it.

Derivatives are Hasse derivatives throughout: the type-``e`` derivative of
``f`` is the coefficient of ``z^e`` in ``f(x+z)``, which for a monomial
``x^a`` works out to ``C(a, e) * x^(a-e)``.  This orientation (numerator
``a`` on top) is the one under which the composition identity
``D_e D_e' f = C(e+e', e) * D_(e+e') f`` holds.

Polynomials are immutable values and all operations are pure functions.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .errors import InconsistentDerivativesError, ParameterError
from .field import FieldElement, PrimeField

Exponent = Tuple[int, ...]
TermKey = Tuple[Exponent, Exponent]


# ---------------------------------------------------------------------------
# Exponent utilities (graded-lex order)
# ---------------------------------------------------------------------------

def total_degree(e: Exponent) -> int:
    return sum(e)


def grlex_key(e: Exponent):
    """Sort key for the graded-lex total order on exponents."""
    return (sum(e), e)


def exponents_of_degree(k: int, d: int) -> Tuple[Exponent, ...]:
    """All length-k exponents of total degree exactly d, in graded-lex order."""
    if k == 0:
        return ((),) if d == 0 else ()

    def gen(nvars: int, deg: int):
        if nvars == 1:
            yield (deg,)
            return
        for i in range(deg + 1):
            for rest in gen(nvars - 1, deg - i):
                yield (i,) + rest

    return tuple(gen(k, d))


def exponents_up_to(k: int, d: int) -> Tuple[Exponent, ...]:
    """All length-k exponents of total degree at most d, in graded-lex order."""
    out = []
    for t in range(d + 1):
        out.extend(exponents_of_degree(k, t))
    return tuple(out)


def exp_add(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def exp_sub(a: Exponent, b: Exponent) -> Optional[Exponent]:
    """``a - b`` componentwise, or None if any coordinate would go negative."""
    out = []
    for x, y in zip(a, b):
        if y > x:
            return None
        out.append(x - y)
    return tuple(out)


def exp_leq(a: Exponent, b: Exponent) -> bool:
    """Componentwise domination ``a <= b``."""
    return all(x <= y for x, y in zip(a, b))


def dominated_exponents(e: Exponent) -> Tuple[Exponent, ...]:
    """All e' with e' <= e componentwise."""
    ranges = [range(c + 1) for c in e]
    return tuple(itertools.product(*ranges))


def multi_binomial(field: PrimeField, a: Exponent, b: Exponent) -> int:
    """C(a, b) = prod_i C(a_i, b_i) mod p; zero unless b <= a."""
    out = 1
    for x, y in zip(a, b):
        out = (out * field.binomial(x, y)) % field.p
        if out == 0 and y > x:
            return 0
    return out


# ---------------------------------------------------------------------------
# Polynomial
# ---------------------------------------------------------------------------

def _coerce_coeff(field: PrimeField, c) -> int:
    if isinstance(c, FieldElement):
        if c.field.p != field.p:
            raise ParameterError("coefficient from a different field")
        return c.value
    return int(c) % field.p


class Polynomial:
    """Sparse polynomial over F_p on a declared (x, z) variable block."""

    __slots__ = ("field", "nx", "nz", "coeffs")

    def __init__(self, field: PrimeField, nx: int, nz: int,
                 coeffs: Mapping[TermKey, int], *, _clean: bool = False):
        self.field = field
        self.nx = nx
        self.nz = nz
        if _clean:
            self.coeffs = dict(coeffs)
            return
        clean: Dict[TermKey, int] = {}
        for (xe, ze), c in coeffs.items():
            xe = tuple(xe)
            ze = tuple(ze)
            if len(xe) != nx or len(ze) != nz:
                raise ParameterError(
                    f"exponent ({xe}, {ze}) does not match block ({nx}, {nz})"
                )
            v = _coerce_coeff(field, c)
            if v:
                prev = clean.get((xe, ze), 0)
                v = (prev + v) % field.p
                if v:
                    clean[(xe, ze)] = v
                elif (xe, ze) in clean:
                    del clean[(xe, ze)]
        self.coeffs = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, field: PrimeField, nx: int, nz: int = 0) -> "Polynomial":
        return cls(field, nx, nz, {}, _clean=True)

    @classmethod
    def x_poly(cls, field: PrimeField, k: int,
               coeffs: Mapping[Exponent, int]) -> "Polynomial":
        return cls(field, k, 0, {(tuple(e), ()): c for e, c in coeffs.items()})

    @classmethod
    def z_poly(cls, field: PrimeField, k: int,
               coeffs: Mapping[Exponent, int]) -> "Polynomial":
        return cls(field, 0, k, {((), tuple(e)): c for e, c in coeffs.items()})

    @classmethod
    def xz_poly(cls, field: PrimeField, nx: int, nz: int,
                coeffs: Mapping[TermKey, int]) -> "Polynomial":
        return cls(field, nx, nz, coeffs)

    @classmethod
    def constant(cls, field: PrimeField, value: int, nx: int, nz: int = 0) -> "Polynomial":
        v = _coerce_coeff(field, value)
        if not v:
            return cls.zero(field, nx, nz)
        return cls(field, nx, nz, {((0,) * nx, (0,) * nz): v}, _clean=True)

    @classmethod
    def x_monomial(cls, field: PrimeField, k: int, e: Exponent, c: int = 1) -> "Polynomial":
        return cls.x_poly(field, k, {tuple(e): c})

    # -- shape helpers ------------------------------------------------------

    @property
    def block(self) -> str:
        if self.nx and self.nz:
            return "xz"
        if self.nz:
            return "z"
        return "x"

    def _check_compatible(self, other: "Polynomial"):
        if not isinstance(other, Polynomial):
            raise ParameterError("expected a Polynomial")
        if (self.field.p != other.field.p or self.nx != other.nx
                or self.nz != other.nz):
            raise ParameterError("polynomials on different blocks or fields")

    def with_z_block(self, nz: int) -> "Polynomial":
        """Embed an x-block polynomial into the (x, z) block."""
        if self.nz:
            raise ParameterError("already has a z-block")
        zzero = (0,) * nz
        return Polynomial(self.field, self.nx, nz,
                          {(xe, zzero): c for (xe, _), c in self.coeffs.items()},
                          _clean=True)

    def with_x_block(self, nx: int) -> "Polynomial":
        """Embed a z-block polynomial into the (x, z) block."""
        if self.nx:
            raise ParameterError("already has an x-block")
        xzero = (0,) * nx
        return Polynomial(self.field, nx, self.nz,
                          {(xzero, ze): c for (_, ze), c in self.coeffs.items()},
                          _clean=True)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        p = self.field.p
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            v = (out.get(key, 0) + c) % p
            if v:
                out[key] = v
            elif key in out:
                del out[key]
        return Polynomial(self.field, self.nx, self.nz, out, _clean=True)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        self._check_compatible(other)
        p = self.field.p
        out = dict(self.coeffs)
        for key, c in other.coeffs.items():
            v = (out.get(key, 0) - c) % p
            if v:
                out[key] = v
            elif key in out:
                del out[key]
        return Polynomial(self.field, self.nx, self.nz, out, _clean=True)

    def __neg__(self) -> "Polynomial":
        p = self.field.p
        return Polynomial(self.field, self.nx, self.nz,
                          {k: p - c for k, c in self.coeffs.items()}, _clean=True)

    def __mul__(self, other: Union["Polynomial", int, FieldElement]) -> "Polynomial":
        if isinstance(other, (int, FieldElement)):
            return self.scale(other)
        self._check_compatible(other)
        p = self.field.p
        out: Dict[TermKey, int] = {}
        for (xa, za), ca in self.coeffs.items():
            for (xb, zb), cb in other.coeffs.items():
                key = (exp_add(xa, xb), exp_add(za, zb))
                v = (out.get(key, 0) + ca * cb) % p
                if v:
                    out[key] = v
                elif key in out:
                    del out[key]
        return Polynomial(self.field, self.nx, self.nz, out, _clean=True)

    __rmul__ = __mul__

    def scale(self, c) -> "Polynomial":
        v = _coerce_coeff(self.field, c)
        if not v:
            return Polynomial.zero(self.field, self.nx, self.nz)
        p = self.field.p
        return Polynomial(self.field, self.nx, self.nz,
                          {k: (x * v) % p for k, x in self.coeffs.items()},
                          _clean=True)

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ParameterError("negative power")
        out = Polynomial.constant(self.field, 1, self.nx, self.nz)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return (self.field.p == other.field.p and self.nx == other.nx
                and self.nz == other.nz and self.coeffs == other.coeffs)

    def __hash__(self) -> int:
        return hash((self.field.p, self.nx, self.nz,
                     frozenset(self.coeffs.items())))

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    # -- degrees and coefficient access --------------------------------------

    def coeff(self, xe: Exponent = (), ze: Exponent = ()) -> int:
        return self.coeffs.get((tuple(xe), tuple(ze)), 0)

    def degree(self) -> int:
        """Total degree over both blocks; -1 for the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(sum(xe) + sum(ze) for xe, ze in self.coeffs)

    def x_degree(self) -> int:
        if not self.coeffs:
            return -1
        return max(sum(xe) for xe, _ in self.coeffs)

    def z_degree(self) -> int:
        if not self.coeffs:
            return -1
        return max(sum(ze) for _, ze in self.coeffs)

    def var_degree(self) -> int:
        """Maximum individual (single-variable) degree; -1 for zero."""
        if not self.coeffs:
            return -1
        return max(max(xe + ze) for xe, ze in self.coeffs)

    def is_homogeneous_x(self, r: Optional[int] = None) -> bool:
        degs = {sum(xe) for xe, _ in self.coeffs}
        if not degs:
            return True
        return degs == {r if r is not None else next(iter(degs))}

    def is_homogeneous_z(self, r: Optional[int] = None) -> bool:
        degs = {sum(ze) for _, ze in self.coeffs}
        if not degs:
            return True
        return degs == {r if r is not None else next(iter(degs))}

    def x_component(self, r: int) -> "Polynomial":
        """The x-homogeneous component of degree r (z-part untouched)."""
        return Polynomial(self.field, self.nx, self.nz,
                          {k: c for k, c in self.coeffs.items() if sum(k[0]) == r},
                          _clean=True)

    def x_truncate_below(self, t: int) -> "Polynomial":
        """Drop terms of x-degree >= t, i.e. reduce mod the ideal <x>^t."""
        return Polynomial(self.field, self.nx, self.nz,
                          {k: c for k, c in self.coeffs.items() if sum(k[0]) < t},
                          _clean=True)

    def min_x_monomial(self) -> Optional[Exponent]:
        """Graded-lex least x-exponent with a nonzero coefficient."""
        if not self.coeffs:
            return None
        return min((xe for xe, _ in self.coeffs), key=grlex_key)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, x: Optional[Sequence[int]] = None,
                 z: Optional[Sequence[int]] = None
                 ) -> Union[int, "Polynomial"]:
        """Evaluate on an assignment covering one or both blocks.

        A full assignment yields a residue.  Assigning only the x-block of
        an (x, z) polynomial yields a z-block polynomial, and symmetrically.
        """
        if x is not None and self.nx == 0:
            raise ParameterError("x-assignment given but no x-block")
        if z is not None and self.nz == 0:
            raise ParameterError("z-assignment given but no z-block")
        if x is None and self.nx > 0 and z is None and self.nz > 0:
            raise ParameterError("no assignment given")
        if x is not None and len(x) != self.nx:
            raise ParameterError(f"x-assignment arity {len(x)} != {self.nx}")
        if z is not None and len(z) != self.nz:
            raise ParameterError(f"z-assignment arity {len(z)} != {self.nz}")

        p = self.field.p
        xv = None if x is None else [int(v) % p for v in x]
        zv = None if z is None else [int(v) % p for v in z]

        full = (x is not None or self.nx == 0) and (z is not None or self.nz == 0)
        if full:
            acc = 0
            for (xe, ze), c in self.coeffs.items():
                t = c
                if xv is not None:
                    for a, e in zip(xv, xe):
                        if e:
                            t = (t * pow(a, e, p)) % p
                if zv is not None:
                    for a, e in zip(zv, ze):
                        if e:
                            t = (t * pow(a, e, p)) % p
                acc = (acc + t) % p
            return acc

        out: Dict[TermKey, int] = {}
        for (xe, ze), c in self.coeffs.items():
            t = c
            if xv is not None:
                for a, e in zip(xv, xe):
                    if e:
                        t = (t * pow(a, e, p)) % p
                key = ((), ze)
            else:
                for a, e in zip(zv, ze):
                    if e:
                        t = (t * pow(a, e, p)) % p
                key = (xe, ())
            if t:
                v = (out.get(key, 0) + t) % p
                if v:
                    out[key] = v
                elif key in out:
                    del out[key]
        if xv is not None:
            return Polynomial(self.field, 0, self.nz, out, _clean=True)
        return Polynomial(self.field, self.nx, 0, out, _clean=True)

    # -- Hasse derivatives and shifts ----------------------------------------

    def hasse_x(self, e: Exponent) -> "Polynomial":
        """Hasse derivative with respect to x^e (monomial-wise rule)."""
        e = tuple(e)
        if len(e) != self.nx:
            raise ParameterError(f"derivative type arity {len(e)} != {self.nx}")
        field = self.field
        p = field.p
        out: Dict[TermKey, int] = {}
        for (xe, ze), c in self.coeffs.items():
            tgt = exp_sub(xe, e)
            if tgt is None:
                continue
            b = multi_binomial(field, xe, e)
            if not b:
                continue
            key = (tgt, ze)
            v = (out.get(key, 0) + c * b) % p
            if v:
                out[key] = v
            elif key in out:
                del out[key]
        return Polynomial(field, self.nx, self.nz, out, _clean=True)

    def shift_x(self, a: Sequence[int]) -> "Polynomial":
        """Substitute x_i -> x_i + a_i (the z-block is untouched)."""
        if len(a) != self.nx:
            raise ParameterError("shift arity mismatch")
        field = self.field
        p = field.p
        av = [int(v) % p for v in a]
        out: Dict[TermKey, int] = {}
        for (xe, ze), c in self.coeffs.items():
            # expand prod_i (x_i + a_i)^{e_i} one coordinate at a time
            partial: Dict[Exponent, int] = {(): c}
            for e_i, a_i in zip(xe, av):
                nxt: Dict[Exponent, int] = {}
                powers = [1]
                for _ in range(e_i):
                    powers.append((powers[-1] * a_i) % p)
                for prefix, pc in partial.items():
                    for b in range(e_i + 1):
                        w = (pc * field.binomial(e_i, b)) % p
                        w = (w * powers[e_i - b]) % p
                        if not w:
                            continue
                        key = prefix + (b,)
                        v = (nxt.get(key, 0) + w) % p
                        if v:
                            nxt[key] = v
                        elif key in nxt:
                            del nxt[key]
                partial = nxt
            for new_xe, w in partial.items():
                key = (new_xe, ze)
                v = (out.get(key, 0) + w) % p
                if v:
                    out[key] = v
                elif key in out:
                    del out[key]
        return Polynomial(field, self.nx, self.nz, out, _clean=True)

    # -- term-order division (for fraction-free elimination) ------------------

    def _lead_key(self) -> TermKey:
        return max(self.coeffs, key=lambda k: (sum(k[0]) + sum(k[1]), k[0] + k[1]))

    def exact_div(self, divisor: "Polynomial") -> "Polynomial":
        """Exact division; raises if the divisor does not divide exactly."""
        self._check_compatible(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero():
            return self
        field = self.field
        rem = dict(self.coeffs)
        quot: Dict[TermKey, int] = {}
        dkey = divisor._lead_key()
        dlc_inv = field.inv(divisor.coeffs[dkey])
        p = field.p
        while rem:
            rkey = max(rem, key=lambda k: (sum(k[0]) + sum(k[1]), k[0] + k[1]))
            qx = exp_sub(rkey[0], dkey[0])
            qz = exp_sub(rkey[1], dkey[1])
            if qx is None or qz is None:
                raise ParameterError("division is not exact")
            qc = (rem[rkey] * dlc_inv) % p
            quot[(qx, qz)] = qc
            for (xe, ze), c in divisor.coeffs.items():
                key = (exp_add(qx, xe), exp_add(qz, ze))
                v = (rem.get(key, 0) - qc * c) % p
                if v:
                    rem[key] = v
                elif key in rem:
                    del rem[key]
        return Polynomial(field, self.nx, self.nz, quot, _clean=True)

    # -- serialization ---------------------------------------------------------

    def to_pairs(self):
        """Single-block serialization: [(exponent, coeff)] in graded-lex order."""
        if self.nx and self.nz:
            raise ParameterError("pair serialization is for single-block polynomials")
        exp_of = (lambda k: k[0]) if self.nx else (lambda k: k[1])
        items = sorted(((exp_of(k), c) for k, c in self.coeffs.items()),
                       key=lambda it: grlex_key(it[0]))
        return [(list(e), c) for e, c in items]

    @classmethod
    def from_pairs(cls, field: PrimeField, k: int, pairs, block: str = "x") -> "Polynomial":
        coeffs = {}
        for e, c in pairs:
            e = tuple(int(v) for v in e)
            if len(e) != k:
                raise ParameterError(f"exponent {e} does not have arity {k}")
            coeffs[e] = coeffs.get(e, 0) + int(c)
        if block == "x":
            return cls.x_poly(field, k, coeffs)
        if block == "z":
            return cls.z_poly(field, k, coeffs)
        raise ParameterError("block must be 'x' or 'z'")

    def sort_key(self):
        """Canonical total order key (used to sort candidate lists)."""
        items = sorted(self.coeffs.items(),
                       key=lambda kv: (grlex_key(kv[0][0]), grlex_key(kv[0][1])))
        return tuple((k[0], k[1], c) for k, c in items)

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"

        def render(key: TermKey, c: int) -> str:
            xe, ze = key
            parts = []
            for i, e in enumerate(xe):
                if e == 1:
                    parts.append(f"x{i + 1}")
                elif e:
                    parts.append(f"x{i + 1}^{e}")
            for i, e in enumerate(ze):
                if e == 1:
                    parts.append(f"z{i + 1}")
                elif e:
                    parts.append(f"z{i + 1}^{e}")
            if not parts:
                return str(c)
            body = "*".join(parts)
            return body if c == 1 else f"{c}*{body}"

        items = sorted(self.coeffs.items(),
                       key=lambda kv: (grlex_key(kv[0][0]), grlex_key(kv[0][1])))
        return " + ".join(render(k, c) for k, c in items)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

class Grid:
    """The evaluation grid S^k for a set S of distinct field elements.

    Iteration over S^k is row-major over the index tuple: the last
    coordinate varies fastest, in the order the points of S were given.
    """

    __slots__ = ("field", "points", "k", "_all")

    def __init__(self, field: PrimeField, points: Sequence[int], k: int):
        vals = tuple(int(v) % field.p for v in points)
        if len(set(vals)) != len(vals):
            raise ParameterError("grid points must be pairwise distinct")
        if not vals:
            raise ParameterError("grid needs at least one point")
        if k < 1:
            raise ParameterError("grid dimension must be positive")
        self.field = field
        self.points = vals
        self.k = k
        self._all = None

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def npoints(self) -> int:
        return len(self.points) ** self.k

    def iter_points(self) -> Iterable[Tuple[int, ...]]:
        return itertools.product(self.points, repeat=self.k)

    def all_points(self) -> Tuple[Tuple[int, ...], ...]:
        if self._all is None:
            self._all = tuple(self.iter_points())
        return self._all

    def __eq__(self, other) -> bool:
        return (isinstance(other, Grid) and other.field.p == self.field.p
                and other.points == self.points and other.k == self.k)

    def __repr__(self) -> str:
        return f"Grid(S={list(self.points)}, k={self.k}, p={self.field.p})"


# ---------------------------------------------------------------------------
# Hasse calculus operations
# ---------------------------------------------------------------------------

def hasse_derivative(f: Polynomial, e: Exponent) -> Polynomial:
    """Type-e Hasse derivative of an x-block polynomial."""
    if f.nz:
        raise ParameterError("hasse_derivative expects an x-block polynomial")
    return f.hasse_x(e)


def hasse_shift_expansion(f: Polynomial, e: Exponent) -> Polynomial:
    """The z^e coefficient of f(x+z), by literal expansion.

    Definitional oracle for :func:`hasse_derivative`: substitutes
    x_i -> x_i + z_i using generic polynomial products (no binomial
    shortcut) and reads off one z-coefficient.  Exponential in the degree,
    so only used in tests and cross-checks.
    """
    if f.nz:
        raise ParameterError("expects an x-block polynomial")
    k = f.nx
    field = f.field
    e = tuple(e)
    shifted = Polynomial.zero(field, k, k)
    binoms = [
        Polynomial.xz_poly(field, k, k, {
            (tuple(1 if j == i else 0 for j in range(k)), (0,) * k): 1,
            ((0,) * k, tuple(1 if j == i else 0 for j in range(k))): 1,
        })
        for i in range(k)
    ]
    for (xe, _), c in f.coeffs.items():
        term = Polynomial.constant(field, c, k, k)
        for i, power in enumerate(xe):
            for _ in range(power):
                term = term * binoms[i]
        shifted = shifted + term
    out: Dict[TermKey, int] = {}
    for (xe, ze), c in shifted.coeffs.items():
        if ze == e:
            out[(xe, ())] = c
    return Polynomial(field, k, 0, out, _clean=True)


def hasse_properties_oracle(f: Polynomial, g: Polynomial,
                            e: Exponent, e2: Exponent) -> bool:
    """Check the five basic Hasse-derivative identities on concrete inputs.

    1. linearity, 2. homogeneous degree drop, 3. monomial rule,
    4. composition with the binomial factor, 5. product rule over [f, g].
    Returns True iff all five hold exactly.
    """
    if f.nz or g.nz or f.nx != g.nx or f.field.p != g.field.p:
        raise ParameterError("expects two x-block polynomials on one field")
    field = f.field
    k = f.nx
    e = tuple(e)
    e2 = tuple(e2)

    # 1. linearity
    if (f + g).hasse_x(e) != f.hasse_x(e) + g.hasse_x(e):
        return False

    # 2. each homogeneous component drops degree by exactly |e|
    for poly in (f, g):
        d = poly.degree()
        for r in range(d + 1):
            comp = poly.x_component(r)
            der = comp.hasse_x(e)
            if der.is_zero():
                continue
            if not der.is_homogeneous_x(r - sum(e)):
                return False

    # 3. monomial rule on every monomial of f
    for (xe, _), c in f.coeffs.items():
        lhs = Polynomial.x_monomial(field, k, xe, c).hasse_x(e)
        tgt = exp_sub(xe, e)
        if tgt is None:
            expect = Polynomial.zero(field, k)
        else:
            expect = Polynomial.x_monomial(
                field, k, tgt, (c * multi_binomial(field, xe, e)) % field.p)
        if lhs != expect:
            return False

    # 4. composition
    lhs = f.hasse_x(e2).hasse_x(e)
    rhs = f.hasse_x(exp_add(e, e2)).scale(
        multi_binomial(field, exp_add(e, e2), e))
    if lhs != rhs:
        return False

    # 5. product rule over the factor list [f, g]
    if (f * g).hasse_x(e) != hasse_product_rule([f, g], e):
        return False

    return True


def hasse_product_rule(factors: Sequence[Polynomial], e: Exponent) -> Polynomial:
    """Sum over all splittings u_1 + ... + u_w = e of the derivative products."""
    if not factors:
        raise ParameterError("need at least one factor")
    field = factors[0].field
    k = factors[0].nx
    e = tuple(e)
    total = Polynomial.zero(field, k)

    def splittings(rest: Exponent, w: int):
        if w == 1:
            yield (rest,)
            return
        for u in dominated_exponents(rest):
            tail = exp_sub(rest, u)
            for more in splittings(tail, w - 1):
                yield (u,) + more

    for split in splittings(e, len(factors)):
        term = Polynomial.constant(field, 1, k)
        for fac, u in zip(factors, split):
            term = term * fac.hasse_x(u)
            if term.is_zero():
                break
        total = total + term
    return total


# ---------------------------------------------------------------------------
# Multiplicity and the multiplicity Schwartz-Zippel oracle
# ---------------------------------------------------------------------------

def multiplicity(f: Polynomial, a: Sequence[int]) -> Union[int, float]:
    """Largest l such that all Hasse derivatives of order < l vanish at a.

    Returns ``math.inf`` iff f is the zero polynomial.  Works order by
    order, so points where f does not vanish cost a single evaluation.
    """
    if f.nz:
        raise ParameterError("multiplicity expects an x-block polynomial")
    if f.is_zero():
        return math.inf
    k = f.nx
    d = f.degree()
    for order in range(d + 1):
        for e in exponents_of_degree(k, order):
            if f.hasse_x(e).evaluate(x=a) != 0:
                return order
    # a translate of a nonzero polynomial keeps its degree, so some
    # derivative of order <= deg f is nonvanishing at every point
    raise AssertionError("unreachable: nonzero polynomial with no witness")


def mult_sz_check(f: Polynomial, grid: Grid) -> bool:
    """Test oracle: sum of multiplicities over the grid <= deg(f) * |S|^(k-1)."""
    if f.is_zero():
        raise ParameterError("mult_sz_check rejects the zero polynomial")
    if f.nx != grid.k:
        raise ParameterError("grid dimension does not match the polynomial")
    total = 0
    for a in grid.iter_points():
        total += multiplicity(f, a)
    return total <= f.degree() * grid.size ** (grid.k - 1)


# ---------------------------------------------------------------------------
# The derivative-gluing operators
# ---------------------------------------------------------------------------

def delta(f: Polynomial, i: int) -> Polynomial:
    """Glue the order-i Hasse derivatives of f with z-monomials.

    Returns sum over |e| = i of z^e * D_e(f), an (x, z)-block polynomial,
    homogeneous of degree i in z.  For x-homogeneous f of degree r >= i the
    x-part is homogeneous of degree r - i.
    """
    if f.nz:
        raise ParameterError("delta expects an x-block polynomial")
    if i < 0:
        raise ParameterError("order must be nonnegative")
    k = f.nx
    field = f.field
    out: Dict[TermKey, int] = {}
    for e in exponents_of_degree(k, i):
        der = f.hasse_x(e)
        for (xe, _), c in der.coeffs.items():
            key = (xe, e)
            v = (out.get(key, 0) + c) % field.p
            if v:
                out[key] = v
            elif key in out:
                del out[key]
    return Polynomial(field, k, k, out, _clean=True)


def delta_tuple(f: Polynomial, s: int) -> Tuple[Polynomial, ...]:
    """The tuple (delta_0(f), ..., delta_{s-1}(f))."""
    return tuple(delta(f, i) for i in range(s))


def tau(p_tuple: Sequence[Polynomial], e: Exponent, i: int) -> Polynomial:
    """Weighted coefficient extraction from a tuple of glued symbols.

    Given s z-block polynomials with entry j homogeneous of degree j,
    returns sum over |e'| = i of z^{e'} * C(e+e', e) * coeff_{z^{e+e'}} of
    entry i + |e|.  On the glued tuple of some f this recovers the type-e
    x-derivative of the order-i glued component.
    """
    if not p_tuple:
        raise ParameterError("empty symbol tuple")
    first = p_tuple[0]
    field = first.field
    k = first.nz
    e = tuple(e)
    if i < 0 or i + sum(e) > len(p_tuple) - 1:
        raise ParameterError(
            f"index i + |e| = {i + sum(e)} out of range for tuple of length {len(p_tuple)}")
    src = p_tuple[i + sum(e)]
    out: Dict[TermKey, int] = {}
    for e2 in exponents_of_degree(k, i):
        c = src.coeff(ze=exp_add(e, e2))
        if not c:
            continue
        w = (c * multi_binomial(field, exp_add(e, e2), e)) % field.p
        if w:
            out[((), e2)] = w
    return Polynomial(field, 0, k, out, _clean=True)


# ---------------------------------------------------------------------------
# Euler recovery of a homogeneous polynomial from its derivatives
# ---------------------------------------------------------------------------

def euler_lift(derivs: Mapping[Exponent, Polynomial], r: int,
               field: PrimeField, k: int) -> Polynomial:
    """Linear reconstruction from order-i derivatives, no consistency checks.

    One round of the Euler identity per order: for |e'| = o - 1,
    (r - o + 1) * D_{e'} = sum_l (e'_l + 1) * x_l * D_{e' + delta_l}.
    Requires p > r so the scalars r - o + 1 are invertible.
    """
    if r >= field.p:
        raise ParameterError(f"need p > {r} for Euler recovery")
    if not derivs:
        raise ParameterError("empty derivative family")
    orders = {sum(e) for e in derivs}
    if len(orders) != 1:
        raise ParameterError("derivative family must have a single order")
    i = orders.pop()
    if i > r:
        raise ParameterError("derivative order exceeds the target degree")
    current = {tuple(e): poly for e, poly in derivs.items()}
    for o in range(i, 0, -1):
        inv = field.inv((r - o + 1) % field.p)
        nxt: Dict[Exponent, Polynomial] = {}
        for e_prev in exponents_of_degree(k, o - 1):
            acc = Polynomial.zero(field, k)
            for l in range(k):
                e_up = list(e_prev)
                e_up[l] += 1
                src = current.get(tuple(e_up))
                if src is None or src.is_zero():
                    continue
                x_l = Polynomial.x_monomial(field, k, tuple(
                    1 if j == l else 0 for j in range(k)))
                acc = acc + (x_l * src).scale(e_prev[l] + 1)
            nxt[e_prev] = acc.scale(inv)
        current = nxt
    return current[(0,) * k]


def euler_recover(derivs: Mapping[Exponent, Polynomial], r: int) -> Polynomial:
    """Unique homogeneous degree-r polynomial with the given order-i derivatives.

    Raises :class:`InconsistentDerivativesError` when the family does not
    come from any homogeneous polynomial (detected by re-deriving), and
    :class:`ParameterError` when r >= p.
    """
    if not derivs:
        raise ParameterError("empty derivative family")
    some = next(iter(derivs.values()))
    field, k = some.field, some.nx
    for e, poly in derivs.items():
        if poly.nz or poly.nx != k or poly.field.p != field.p:
            raise ParameterError("derivatives must be x-block polynomials on one field")
        if not poly.is_zero() and not poly.is_homogeneous_x(r - sum(e)):
            raise InconsistentDerivativesError(
                f"derivative of type {tuple(e)} is not homogeneous of degree {r - sum(e)}")
    f = euler_lift(derivs, r, field, k)
    for e, poly in derivs.items():
        if f.hasse_x(tuple(e)) != poly:
            raise InconsistentDerivativesError(
                "derivative family is not consistent with any single polynomial")
    return f


# ---------------------------------------------------------------------------
# Misc utilities
# ---------------------------------------------------------------------------

def random_x_poly(field: PrimeField, k: int, max_degree: int, randbelow) -> Polynomial:
    """Uniform polynomial of total degree <= max_degree.

    ``randbelow`` is any callable n -> uniform int in [0, n); coefficients
    are drawn in graded-lex order, which fixes the stream layout.
    """
    coeffs = {}
    for e in exponents_up_to(k, max_degree):
        coeffs[e] = randbelow(field.p)
    return Polynomial.x_poly(field, k, coeffs)


def agreement_fraction(matches: int, total: int) -> Fraction:
    return Fraction(matches, total)
