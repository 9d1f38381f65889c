"""Arithmetic over GF(p^m) backed by discrete exp/log tables.

Elements are plain integers in ``[0, q)``.  For ``m > 1`` an element's base-p
digits are the coefficients of its polynomial representation, lowest degree
first (for p = 2, bit i is the coefficient of x^i).  Every operation takes its
field explicitly through a :class:`FieldSpec`; there is no global state.

All arithmetic methods accept Python ints or integer numpy arrays and
broadcast in the usual way.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

MAX_ORDER = 2**16


class GaloisError(ValueError):
    pass


class NotPrime(GaloisError):
    pass


class ReduciblePolynomial(GaloisError):
    pass


class OrderTooLarge(GaloisError):
    pass


class MixedFields(GaloisError):
    pass


class DivisionByZero(ZeroDivisionError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# --- polynomials over GF(p), coefficient lists lowest degree first ---------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a = _trim([c % p for c in a])
    b = _trim([c % p for c in b])
    lead_inv = pow(b[-1], p - 2, p) if p > 2 else 1
    while len(a) >= len(b):
        coef = (a[-1] * lead_inv) % p
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - coef * c) % p
        _trim(a)
    return a


def _monic_polys(degree: int, p: int):
    for low in range(p**degree):
        coeffs = []
        for _ in range(degree):
            coeffs.append(low % p)
            low //= p
        yield coeffs + [1]


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    poly = _trim([c % p for c in poly])
    deg = len(poly) - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    if poly[0] == 0:
        return False
    for d in range(1, deg // 2 + 1):
        for cand in _monic_polys(d, p):
            if not _poly_mod(poly, cand, p):
                return False
    return True


@functools.lru_cache(maxsize=None)
def default_polynomial(p: int, m: int) -> tuple[int, ...]:
    """Lexicographically least monic irreducible polynomial of degree m.

    Candidates are ordered by the integer whose base-p digits are the
    non-leading coefficients, so GF(8) gets x^3 + x + 1 and GF(256) gets
    x^8 + x^4 + x^3 + x + 1.
    """
    for cand in _monic_polys(m, p):
        if is_irreducible(cand, p):
            return tuple(cand)
    raise ReduciblePolynomial(f"no irreducible polynomial of degree {m} over GF({p})")


def _to_digits(a: int, p: int, m: int) -> list[int]:
    out = []
    for _ in range(m):
        out.append(a % p)
        a //= p
    return out


def _from_digits(d: Sequence[int], p: int) -> int:
    v = 0
    for c in reversed(d):
        v = v * p + c
    return v


def _slow_mul(a: int, b: int, poly: tuple[int, ...], p: int, m: int) -> int:
    if m == 1:
        return (a * b) % p
    if p == 2:
        mod = _from_digits(poly, 2)
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a >> m:
                a ^= mod
        return r
    da, db = _to_digits(a, p, m), _to_digits(b, p, m)
    prod = [0] * (2 * m - 1)
    for i, x in enumerate(da):
        if x:
            for j, y in enumerate(db):
                prod[i + j] += x * y
    rem = _poly_mod(prod, poly, p)
    return _from_digits(rem + [0] * (m - len(rem)), p)


def _slow_pow(a: int, n: int, poly, p, m) -> int:
    r = 1
    while n:
        if n & 1:
            r = _slow_mul(r, a, poly, p, m)
        a = _slow_mul(a, a, poly, p, m)
        n >>= 1
    return r


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """GF(p^m) with precomputed exp/log tables.

    ``exp_table[i] = g^i`` for ``i < 2(q-1)`` and 0 beyond, while
    ``log_table[0]`` points past that range.  ``exp[log a + log b]`` is then
    the product for every pair, zeros included, with no modulo and no branch.
    """

    characteristic: int
    degree: int
    reduction_polynomial: tuple[int, ...]
    generator: int
    exp_table: np.ndarray = dc_field(repr=False)
    log_table: np.ndarray = dc_field(repr=False)

    @property
    def order(self) -> int:
        return self.characteristic**self.degree

    q = order

    def _key(self):
        return (self.characteristic, self.degree, self.reduction_polynomial)

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __str__(self):
        return f"GF({self.order})"

    # -- elementwise arithmetic -------------------------------------------

    def add(self, a, b):
        p, m = self.characteristic, self.degree
        if p == 2:
            return np.bitwise_xor(a, b)
        if m == 1:
            return (np.add(a, b)) % p
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        pk = 1
        for _ in range(m):
            out += ((a // pk + b // pk) % p) * pk
            pk *= p
        return out if out.ndim else int(out)

    def neg(self, a):
        p, m = self.characteristic, self.degree
        if p == 2:
            return a
        if m == 1:
            return np.negative(a) % p
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros_like(a)
        pk = 1
        for _ in range(m):
            out += ((-(a // pk)) % p) * pk
            pk *= p
        return out if out.ndim else int(out)

    def sub(self, a, b):
        if self.characteristic == 2:
            return np.bitwise_xor(a, b)
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.degree == 1:
            return np.multiply(a, b) % self.characteristic
        out = self.exp_table[self.log_table[a] + self.log_table[b]]
        return out if np.ndim(out) else int(out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DivisionByZero(f"0 has no inverse in {self}")
        out = self.exp_table[(self.order - 1) - self.log_table[a]]
        return out if out.ndim else int(out)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, n: int):
        a = np.asarray(a, dtype=np.int64)
        if n == 0:
            out = np.ones_like(a)
        elif n < 0:
            return self.pow(self.inv(a), -n)
        else:
            e = (self.log_table[a] * n) % (self.order - 1)
            out = np.where(a == 0, 0, self.exp_table[e])  # log[0] is a sentinel
        return out if out.ndim else int(out)

    # -- vector helpers -----------------------------------------------------

    def sum(self, a, axis=-1):
        """Field sum along ``axis``."""
        a = np.asarray(a, dtype=np.int64)
        if self.characteristic == 2:
            return np.bitwise_xor.reduce(a, axis=axis)
        if self.degree == 1:
            return a.sum(axis=axis) % self.characteristic
        a = np.moveaxis(a, axis, 0)
        out = np.zeros(a.shape[1:], dtype=np.int64)
        for row in a:
            out = self.add(out, row)
        return out

    def matmul(self, a, b):
        """Matrix product over the field; supports leading batch axes."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return self.sum(self.mul(a[..., :, :, None], b[..., None, :, :]), axis=-2)

    def elements(self) -> np.ndarray:
        return np.arange(self.order, dtype=np.int64)

    def sample_uniform(self, rng: np.random.Generator, size=None):
        """Uniform element(s); ``rng`` is a seeded numpy Generator."""
        return rng.integers(0, self.order, size=size, dtype=np.int64)

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self, int(value))


@functools.lru_cache(maxsize=64)
def _build_field(p: int, m: int, poly: tuple[int, ...]) -> FieldSpec:
    q = p**m
    if q == 2:
        g = 1
    else:
        factors = _prime_factors(q - 1)
        for g in range(2 if m == 1 else p, q):
            if all(_slow_pow(g, (q - 1) // f, poly, p, m) != 1 for f in factors):
                break
        else:  # pragma: no cover - every finite field has a generator
            raise GaloisError(f"no generator found for GF({q})")
    zero_log = 2 * q
    exp = np.zeros(2 * zero_log + 1, dtype=np.int64)
    log = np.full(q, zero_log, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        exp[i] = x
        log[x] = i
        x = _slow_mul(x, g, poly, p, m)
    exp[q - 1 : 2 * (q - 1)] = exp[: q - 1]
    exp.setflags(write=False)
    log.setflags(write=False)
    return FieldSpec(p, m, poly, g, exp, log)


def make_field(p: int, m: int = 1, poly: Sequence[int] | None = None) -> FieldSpec:
    """Build GF(p^m).

    ``poly`` lists the reduction polynomial's coefficients lowest degree
    first and must be monic of degree m, e.g. ``(1, 1, 0, 1)`` for x^3+x+1.
    It is ignored for prime fields.
    """
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if m < 1:
        raise GaloisError("degree must be >= 1")
    if p**m > MAX_ORDER:
        raise OrderTooLarge(f"{p}^{m} exceeds the ceiling {MAX_ORDER}")
    if m == 1:
        poly_t: tuple[int, ...] = (0, 1)
    elif poly is None:
        poly_t = default_polynomial(p, m)
    else:
        poly_t = tuple(int(c) % p for c in poly)
        if len(poly_t) != m + 1 or poly_t[-1] != 1:
            raise GaloisError(f"reduction polynomial must be monic of degree {m}")
        if not is_irreducible(poly_t, p):
            raise ReduciblePolynomial(f"{poly_t} is reducible over GF({p})")
    return _build_field(p, m, poly_t)


def field_of_order(q: int) -> FieldSpec:
    """GF(q) with the default polynomial, for any prime power q."""
    if q < 2:
        raise GaloisError(f"{q} is not a prime power")
    for p in _prime_factors(q)[:1]:
        m, r = 0, q
        while r % p == 0:
            r //= p
            m += 1
        if r == 1:
            return make_field(p, m)
    raise GaloisError(f"{q} is not a prime power")


@dataclass(frozen=True)
class FieldElement:
    """Convenience value type with operator overloads."""

    field: FieldSpec
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.field.order:
            raise GaloisError(f"{self.value} is not an element of {self.field}")

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement):
            raise TypeError(f"expected FieldElement, got {type(other).__name__}")
        if other.field != self.field:
            raise MixedFields(f"{self.field} vs {other.field}")

    def __add__(self, other):
        self._check(other)
        return FieldElement(self.field, int(self.field.add(self.value, other.value)))

    def __sub__(self, other):
        self._check(other)
        return FieldElement(self.field, int(self.field.sub(self.value, other.value)))

    def __mul__(self, other):
        self._check(other)
        return FieldElement(self.field, int(self.field.mul(self.value, other.value)))

    def __truediv__(self, other):
        self._check(other)
        return FieldElement(self.field, int(self.field.div(self.value, other.value)))

    def __neg__(self):
        return FieldElement(self.field, int(self.field.neg(self.value)))

    def __pow__(self, n: int):
        return FieldElement(self.field, int(self.field.pow(self.value, n)))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, int(self.field.inv(self.value)))

    def __int__(self):
        return self.value
