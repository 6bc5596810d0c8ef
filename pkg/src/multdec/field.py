"""Exact arithmetic in a prime field F_p.

A :class:`PrimeField` carries the modulus and a memoized Pascal triangle
for binomial coefficients; a :class:`FieldElement` is a fully reduced
residue tied to its field.  All values are immutable after construction,
so they can be shared freely between threads.

Residues are plain Python ints in ``[0, p)``; the overloaded operators on
:class:`FieldElement` reduce exactly.  The modulus must fit in a machine
word (p < 2**31) -- desk-scale instances never need big moduli, and the
bound keeps intermediate products within a double-width integer.
"""

from __future__ import annotations

from .errors import ParameterError

MAX_MODULUS = 2**31


def _is_prime(n: int) -> bool:
    """Deterministic trial division; adequate for word-sized moduli."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


class PrimeField:
    """The field F_p for a prime p, with memoized binomials mod p."""

    __slots__ = ("p", "_pascal")

    def __init__(self, p: int):
        if not isinstance(p, int) or not _is_prime(p):
            raise ParameterError(f"modulus {p!r} is not prime")
        if p >= MAX_MODULUS:
            raise ParameterError(f"modulus {p} exceeds the 2**31 word bound")
        self.p = p
        self._pascal = [[1]]  # row n holds C(n, 0..n) mod p

    # -- raw residue arithmetic -------------------------------------------

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return pow(a, self.p - 2, self.p)

    def binomial(self, n: int, r: int) -> int:
        """C(n, r) mod p by Pascal's recurrence; 0 when r > n.

        The recurrence stays correct when n >= p, where factorial-inverse
        formulas break down.
        """
        if n < 0 or r < 0:
            raise ParameterError("binomial arguments must be nonnegative")
        if r > n:
            return 0
        rows = self._pascal
        while len(rows) <= n:
            prev = rows[-1]
            row = [1] * (len(prev) + 1)
            for i in range(1, len(prev)):
                row[i] = (prev[i - 1] + prev[i]) % self.p
            rows.append(row)
        return rows[n][r]

    # -- element construction ---------------------------------------------

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self, value)

    def zero(self) -> "FieldElement":
        return FieldElement(self, 0)

    def one(self) -> "FieldElement":
        return FieldElement(self, 1)

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("PrimeField", self.p))

    def __repr__(self) -> str:
        return f"PrimeField({self.p})"


class FieldElement:
    """A reduced residue in a :class:`PrimeField`.

    Mixed-modulus arithmetic is rejected; ints are coerced to the element's
    own field.
    """

    __slots__ = ("field", "value")

    def __init__(self, field: PrimeField, value: int):
        self.field = field
        self.value = value % field.p

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field.p != self.field.p:
                raise ParameterError(
                    f"modulus mismatch: p={self.field.p} vs p={other.field.p}"
                )
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, v - self.value)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value * v)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(self.field, -self.value)

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value * self.field.inv(v))

    def __eq__(self, other) -> bool:
        if isinstance(other, FieldElement):
            return self.field.p == other.field.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.p
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.field.p, self.value))

    def __bool__(self) -> bool:
        return self.value != 0

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.p})"


def binomial_mod_p(n: int, r: int, field: PrimeField) -> FieldElement:
    """C(n, r) mod p as a field element; 0 when r > n."""
    return field.element(field.binomial(n, r))
